use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::qcore::PureState;

use super::hamiltonian::{SpinHamiltonian, MAX_DENSE_HAMILTONIAN_SITES};

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `y -= c x`.
pub(crate) fn sub_scaled(y: &mut [C64], c: C64, x: &[C64]) {
    y.iter_mut().zip(x).for_each(|(a, b)| *a -= c * b);
}

/// Orthonormalize `w` against `basis` (two Gram-Schmidt passes).
pub(crate) fn reorthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            sub_scaled(w, c, v);
        }
    }
}

/// Lanczos recursion with full reorthogonalization.
pub(crate) struct LanczosBasis {
    pub vectors: Vec<Vec<C64>>,
    pub alpha: Vec<f64>,
    /// Off-diagonal; `beta[j]` couples vectors `j` and `j + 1`. One longer
    /// than `alpha` minus one unless the space became invariant.
    pub beta: Vec<f64>,
    pub invariant: bool,
}

impl LanczosBasis {
    /// Span of `{v, Hv, …}` up to `max_dim`, kept orthogonal to `deflate`.
    pub fn build(h: &SpinHamiltonian, v: &[C64], max_dim: usize, deflate: &[Vec<C64>]) -> Self {
        let scale = norm(v);
        let mut first: Vec<C64> = v.iter().map(|x| x / scale).collect();
        reorthogonalize(&mut first, deflate);
        let n0 = norm(&first);
        first.iter_mut().for_each(|x| *x /= n0);
        let mut vectors = vec![first];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut w = vec![C64::new(0.0, 0.0); v.len()];
        loop {
            let j = vectors.len() - 1;
            h.apply_into(&vectors[j], &mut w);
            let a = dot(&vectors[j], &w).re;
            alpha.push(a);
            reorthogonalize(&mut w, deflate);
            reorthogonalize(&mut w, &vectors);
            let b = norm(&w);
            // Breakdown: the Krylov space is invariant under H.
            let h_scale = alpha.iter().map(|x| x.abs()).fold(b, f64::max).max(1.0);
            if b <= 1e-12 * h_scale {
                return LanczosBasis { vectors, alpha, beta, invariant: true };
            }
            beta.push(b);
            if vectors.len() == max_dim {
                return LanczosBasis { vectors, alpha, beta, invariant: false };
            }
            vectors.push(w.iter().map(|x| x / b).collect());
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Eigen-decomposition of the projected tridiagonal matrix.
    pub fn ritz(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        let k = self.dim();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                self.alpha[i]
            } else if i + 1 == j {
                self.beta[i]
            } else if j + 1 == i {
                self.beta[j]
            } else {
                0.0
            }
        });
        SymmetricEigen::new(t)
    }

    /// `Σ_j c_j v_j`.
    pub fn combine(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.vectors[0].len()];
        for (v, &c) in self.vectors.iter().zip(coeffs) {
            out.iter_mut().zip(v).for_each(|(o, x)| *o += c * x);
        }
        out
    }

    /// Outgoing coupling `β_k` past the last vector (zero if invariant).
    pub fn residual_coupling(&self) -> f64 {
        if self.invariant {
            0.0
        } else {
            self.beta[self.dim() - 1]
        }
    }
}

/// Controls for the Krylov propagator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovConfig {
    /// Largest Krylov subspace per step.
    pub dim: usize,
    /// Error estimate allowed per step.
    pub tolerance: f64,
    pub max_steps: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        KrylovConfig { dim: 30, tolerance: 1e-8, max_steps: 100_000 }
    }
}

/// Result of a propagation with diagnostics.
#[derive(Clone, Debug)]
pub struct Evolution {
    pub state: PureState,
    pub steps: usize,
    /// Sum of the per-step error estimates.
    pub error_estimate: f64,
    /// `| ‖ψ(t)‖ − ‖ψ(0)‖ |` before the final normalization.
    pub norm_drift: f64,
}

/// `e^{−iHt}|ψ⟩` with default controls.
pub fn evolve(h: &SpinHamiltonian, psi: &PureState, t: f64) -> Result<PureState> {
    Ok(evolve_with(h, psi, t, &KrylovConfig::default())?.state)
}

pub fn evolve_with(h: &SpinHamiltonian, psi: &PureState, t: f64, cfg: &KrylovConfig) -> Result<Evolution> {
    let mut out = None;
    evolve_along(h, psi, &[t], cfg, |_, _, ev| {
        out = Some(ev.clone());
        Ok(())
    })?;
    Ok(out.expect("one time point visited"))
}

/// Propagate through the non-decreasing, non-negative `times`, handing the
/// state at each one to `visit(index, time, evolution)`.
pub fn evolve_along(
    h: &SpinHamiltonian,
    psi: &PureState,
    times: &[f64],
    cfg: &KrylovConfig,
    mut visit: impl FnMut(usize, f64, &Evolution) -> Result<()>,
) -> Result<()> {
    h.check_state(psi)?;
    if cfg.dim < 2 || !cfg.tolerance.is_finite() || cfg.tolerance <= 0.0 {
        return Err(Error::input("Krylov dimension must be at least 2 and tolerance positive"));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::input("times must be finite, non-negative and non-decreasing"));
    }
    let dim = cfg.dim.min(h.dim());
    let mut v = psi.amplitudes().to_vec();
    let norm0 = norm(&v);
    let (mut now, mut steps, mut err_total) = (0.0f64, 0usize, 0.0f64);
    for (idx, &target) in times.iter().enumerate() {
        while now < target {
            if steps == cfg.max_steps {
                return Err(Error::Numerical {
                    message: format!("Krylov propagation exceeded {} steps at t = {now}", cfg.max_steps),
                    residual: err_total,
                });
            }
            let (tau, err) = krylov_step(h, &mut v, target - now, dim, cfg.tolerance)?;
            now = if tau >= target - now { target } else { now + tau };
            steps += 1;
            err_total += err;
        }
        let drift = (norm(&v) - norm0).abs();
        let ev = Evolution { state: PureState::new(v.clone())?, steps, error_estimate: err_total, norm_drift: drift };
        visit(idx, target, &ev)?;
    }
    Ok(())
}

/// One step of at most `max_tau`; returns the step taken and its error estimate.
fn krylov_step(h: &SpinHamiltonian, v: &mut Vec<C64>, max_tau: f64, dim: usize, tol: f64) -> Result<(f64, f64)> {
    let beta0 = norm(v);
    let basis = LanczosBasis::build(h, v, dim, &[]);
    let eig = basis.ritz();
    let k = basis.dim();
    let coupling = basis.residual_coupling();
    // c(τ) = Q e^{−iτΛ} Qᵀ e₁
    let coeffs = |tau: f64| -> Vec<C64> {
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let q = eig.eigenvectors[(i, j)] * eig.eigenvectors[(0, j)];
                        C64::from_polar(q, -tau * eig.eigenvalues[j])
                    })
                    .sum()
            })
            .collect()
    };
    let error = |c: &[C64]| beta0 * coupling * c[k - 1].norm();
    let mut tau = max_tau;
    let mut c = coeffs(tau);
    let mut err = error(&c);
    if err > tol {
        // Largest step meeting the tolerance, by bisection on a log scale.
        let (mut lo, mut hi) = (0.0f64, tau);
        let mut best = None;
        for _ in 0..60 {
            let mid = if lo == 0.0 { hi / 16.0 } else { (lo * hi).sqrt() };
            let cm = coeffs(mid);
            let em = error(&cm);
            if em <= tol {
                lo = mid;
                best = Some((mid, cm, em));
            } else {
                hi = mid;
            }
            if lo > 0.0 && hi / lo < 1.01 {
                break;
            }
        }
        match best {
            Some((t, cm, em)) => {
                tau = t;
                c = cm;
                err = em;
            }
            None => {
                return Err(Error::Numerical {
                    message: "Krylov step size underflow".into(),
                    residual: err,
                })
            }
        }
    }
    let scaled: Vec<C64> = c.iter().map(|x| x * beta0).collect();
    *v = basis.combine(&scaled);
    Ok((tau, err))
}

/// Dense eigendecomposition propagator, the oracle for small chains.
pub fn evolve_dense(h: &SpinHamiltonian, psi: &PureState, t: f64) -> Result<PureState> {
    h.check_state(psi)?;
    if h.n_sites() > MAX_DENSE_HAMILTONIAN_SITES {
        return Err(Error::size(format!("dense propagation limited to {MAX_DENSE_HAMILTONIAN_SITES} sites")));
    }
    let (vals, vecs) = linalg::hermitian_eigh(&h.to_dense()?)?;
    let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
    let mut coeffs = vecs.adjoint() * v;
    coeffs.iter_mut().zip(&vals).for_each(|(c, e)| *c *= C64::from_polar(1.0, -t * e));
    let out = vecs * coeffs;
    PureState::new(out.iter().copied().collect())
}
