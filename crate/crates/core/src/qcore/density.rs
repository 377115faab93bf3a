use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

use super::state::{hermitize, PureState, MAX_DENSE_AB_QUBITS};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-10;
const SPECTRUM_TOL: f64 = 1e-9;

/// Largest moment order handled anywhere in the crate.
pub const MAX_MOMENT_ORDER: usize = 30;

/// Bipartite qubit density matrix `ρ_AB` on `n_a + n_b` qubits, A leading.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
    n_a: usize,
    n_b: usize,
}

impl DensityMatrix {
    /// Validate and wrap an explicit matrix: Hermitian, unit trace, positive
    /// semidefinite (all within 1e-10).
    pub fn new(entries: CMatrix, n_a: usize, n_b: usize) -> Result<Self> {
        if n_a == 0 || n_b == 0 {
            return Err(Error::input("both subsystems need at least one qubit"));
        }
        if n_a + n_b > MAX_DENSE_AB_QUBITS {
            return Err(Error::size(format!("{} qubits exceeds the dense cap", n_a + n_b)));
        }
        let dim = 1usize << (n_a + n_b);
        if entries.shape() != (dim, dim) {
            return Err(Error::Shape { expected: dim, got: entries.nrows() });
        }
        let defect = linalg::hermiticity_defect(&entries);
        if defect > HERMITIAN_TOL {
            return Err(Error::input(format!("matrix is not Hermitian (defect {defect:e})")));
        }
        let tr = linalg::trace(&entries);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::input(format!("trace {tr} is not 1")));
        }
        let entries = hermitize(entries);
        let min_ev = linalg::hermitian_eigenvalues(&entries)?[0];
        if min_ev < -POSITIVITY_TOL {
            return Err(Error::input(format!("matrix has negative eigenvalue {min_ev:e}")));
        }
        Ok(DensityMatrix { entries, n_a, n_b })
    }

    /// Trusted constructor for matrices that are positive by construction.
    pub(crate) fn from_parts(entries: CMatrix, n_a: usize, n_b: usize) -> Self {
        debug_assert_eq!(entries.nrows(), 1 << (n_a + n_b));
        DensityMatrix { entries, n_a, n_b }
    }

    /// `|ψ⟩⟨ψ|` split after the first `n_a` qubits.
    pub fn from_pure(psi: &PureState, n_a: usize) -> Result<Self> {
        let n = psi.n_qubits();
        if n_a == 0 || n_a >= n {
            return Err(Error::input(format!("cannot split {n} qubits after {n_a}")));
        }
        if n > MAX_DENSE_AB_QUBITS {
            return Err(Error::size(format!("{n} qubits exceeds the dense cap")));
        }
        let v = CMatrix::from_column_slice(1 << n, 1, psi.amplitudes());
        Ok(Self::from_parts(linalg::mul_adjoint(&v, &v), n_a, n - n_a))
    }

    /// `I / 2^(n_a+n_b)`.
    pub fn maximally_mixed(n_a: usize, n_b: usize) -> Result<Self> {
        let dim = 1usize << (n_a + n_b);
        let m = CMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0);
        Self::new(m, n_a, n_b)
    }

    /// `ρ_A ⊗ ρ_B`.
    pub fn product(rho_a: &CMatrix, n_a: usize, rho_b: &CMatrix, n_b: usize) -> Result<Self> {
        Self::new(linalg::kron(rho_a, rho_b), n_a, n_b)
    }

    /// Two-qubit Werner state `p |ψ⁻⟩⟨ψ⁻| + (1-p) I/4`.
    pub fn werner(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::input(format!("Werner weight {p} outside [0, 1]")));
        }
        let singlet = PureState::from_real(&[0.0, 1.0, -1.0, 0.0])?;
        let proj = Self::from_pure(&singlet, 1)?.entries;
        let m = proj * C64::new(p, 0.0) + CMatrix::identity(4, 4) * C64::new((1.0 - p) / 4.0, 0.0);
        Self::new(m, 1, 1)
    }

    /// Convex mixture `Σ w_i ρ_i` of states sharing the same split.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::input("empty mixture"))?.1;
        let dim = first.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            if rho.n_a != first.n_a || rho.n_b != first.n_b {
                return Err(Error::input("mixture components have different splits"));
            }
            if *w < 0.0 {
                return Err(Error::input("negative mixture weight"));
            }
            m += &rho.entries * C64::new(*w, 0.0);
        }
        Self::new(m, first.n_a, first.n_b)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.entries).re
    }

    /// The same matrix with the roles of A and B exchanged.
    pub fn swap_parties(&self) -> DensityMatrix {
        let da = 1usize << self.n_a;
        let db = 1usize << self.n_b;
        let m = CMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            let (b, a) = (r / da, r % da);
            let (bp, ap) = (c / da, c % da);
            self.entries[(a * db + b, ap * db + bp)]
        });
        DensityMatrix { entries: m, n_a: self.n_b, n_b: self.n_a }
    }
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.entries.iter().map(|z| z.norm_sqr()).sum()
}

/// `ρ^{T_B}`: transpose of the B indices only.
pub fn partial_transpose(rho: &DensityMatrix) -> CMatrix {
    linalg::partial_transpose_second(&rho.entries, 1 << rho.n_a, 1 << rho.n_b)
}

/// Eigenvalues at or above `-PPT_TOL` count as non-negative.
pub const PPT_TOL: f64 = 1e-10;

/// Real spectrum of `ρ^{T_B}`, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct PTSpectrum {
    eigenvalues: Vec<f64>,
}

impl PTSpectrum {
    /// Wrap an already computed spectrum, checking the physical bounds.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Result<Self> {
        eigenvalues.sort_by(f64::total_cmp);
        let sum: f64 = eigenvalues.iter().sum();
        if (sum - 1.0).abs() > SPECTRUM_TOL {
            return Err(Error::Numerical {
                message: "partial-transpose spectrum does not sum to one".into(),
                residual: (sum - 1.0).abs(),
            });
        }
        let lo = eigenvalues.first().copied().unwrap_or(0.0);
        let hi = eigenvalues.last().copied().unwrap_or(0.0);
        if lo < -0.5 - SPECTRUM_TOL || hi > 1.0 + SPECTRUM_TOL {
            return Err(Error::Numerical {
                message: format!("partial-transpose eigenvalue outside [-1/2, 1]: [{lo}, {hi}]"),
                residual: (lo + 0.5).min(0.0).abs().max((hi - 1.0).max(0.0)),
            });
        }
        Ok(PTSpectrum { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `Σ |λ_k|`.
    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues.iter().map(|x| x.abs()).sum()
    }

    /// `log2 Σ |λ_k|`, written as `log2(1 + 2 Σ_{λ<0} |λ|)` so that rounding
    /// in the positive part cannot leak in. Exactly zero when no eigenvalue
    /// is below `-PPT_TOL`.
    pub fn log_negativity(&self) -> f64 {
        if self.eigenvalues.first().is_none_or(|&x| x >= -PPT_TOL) {
            return 0.0;
        }
        let neg: f64 = self.eigenvalues.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
        (1.0 + 2.0 * neg).log2()
    }

    /// Power sum `Σ λ_k^m`.
    pub fn power_sum(&self, m: usize) -> f64 {
        self.eigenvalues.iter().map(|&x| x.powi(m as i32)).sum()
    }

    pub fn moments(&self, n_a: usize, n_b: usize, max_order: usize) -> Result<MomentVector> {
        check_order(max_order)?;
        let moments = (2..=max_order).map(|m| self.power_sum(m)).collect();
        MomentVector::new(n_a, n_b, moments)
    }
}

pub fn pt_spectrum(rho: &DensityMatrix) -> Result<PTSpectrum> {
    let ev = linalg::hermitian_eigenvalues(&partial_transpose(rho))?;
    PTSpectrum::from_eigenvalues(ev)
}

/// Logarithmic negativity in ebits.
pub fn log_negativity(rho: &DensityMatrix) -> Result<f64> {
    Ok(pt_spectrum(rho)?.log_negativity())
}

/// Measurable features of a state: subsystem sizes and `μ_2 … μ_M`.
///
/// `μ_0` (the Hilbert-space dimension) and `μ_1 = 1` are implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    n_a: usize,
    n_b: usize,
    moments: Vec<f64>,
}

/// Slack allowed on `|μ_m| ≤ 1` for measured (noisy) moments.
const MOMENT_BOUND_TOL: f64 = 1e-9;

impl MomentVector {
    pub fn new(n_a: usize, n_b: usize, moments: Vec<f64>) -> Result<Self> {
        if moments.is_empty() {
            return Err(Error::input("at least μ_2 is required"));
        }
        check_order(moments.len() + 1)?;
        if let Some(bad) = moments.iter().find(|x| !x.is_finite() || x.abs() > 1.0 + MOMENT_BOUND_TOL) {
            return Err(Error::input(format!("moment {bad} outside [-1, 1]")));
        }
        if moments[0] <= 0.0 {
            return Err(Error::input(format!("μ_2 = {} must be positive", moments[0])));
        }
        Ok(MomentVector { n_a, n_b, moments })
    }

    /// Measured (noisy) moments: only `|μ_m| ≤ 1` is enforced, since a
    /// finite-shot estimate of a small `μ_2` may come out non-positive.
    pub fn measured(n_a: usize, n_b: usize, moments: Vec<f64>) -> Result<Self> {
        if moments.is_empty() {
            return Err(Error::input("at least μ_2 is required"));
        }
        check_order(moments.len() + 1)?;
        if let Some(bad) = moments.iter().find(|x| !x.is_finite() || x.abs() > 1.0 + MOMENT_BOUND_TOL) {
            return Err(Error::input(format!("moment {bad} outside [-1, 1]")));
        }
        Ok(MomentVector { n_a, n_b, moments })
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn max_order(&self) -> usize {
        self.moments.len() + 1
    }

    /// `(μ_2, …, μ_M)`.
    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    /// `μ_m` for any `0 ≤ m ≤ M`.
    pub fn mu(&self, m: usize) -> f64 {
        match m {
            0 => (1u64 << (self.n_a + self.n_b)) as f64,
            1 => 1.0,
            _ => self.moments[m - 2],
        }
    }

    /// Keep only `μ_2 … μ_order`.
    pub fn truncated(&self, order: usize) -> Result<MomentVector> {
        if order < 2 || order > self.max_order() {
            return Err(Error::input(format!("cannot truncate order {} to {order}", self.max_order())));
        }
        Ok(MomentVector { n_a: self.n_a, n_b: self.n_b, moments: self.moments[..order - 1].to_vec() })
    }

    /// Network input tuple `(N_A, N_B, μ_2, …, μ_M)`.
    pub fn features(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.moments.len() + 2);
        f.push(self.n_a as f64);
        f.push(self.n_b as f64);
        f.extend_from_slice(&self.moments);
        f
    }
}

fn check_order(max_order: usize) -> Result<()> {
    if !(2..=MAX_MOMENT_ORDER).contains(&max_order) {
        return Err(Error::input(format!("moment order {max_order} outside 2..={MAX_MOMENT_ORDER}")));
    }
    Ok(())
}

/// `μ_m = Σ λ_k^m` for `m = 2..=max_order`.
pub fn pt_moments(rho: &DensityMatrix, max_order: usize) -> Result<MomentVector> {
    check_order(max_order)?;
    pt_spectrum(rho)?.moments(rho.n_a, rho.n_b, max_order)
}

/// `Tr[(ρ^{T_B})^m]` by explicit matrix powers. Independent of the
/// eigensolver; used to cross-check [`pt_moments`].
pub fn pt_moments_by_powers(rho: &DensityMatrix, max_order: usize) -> Result<Vec<f64>> {
    check_order(max_order)?;
    let pt = partial_transpose(rho);
    let mut power = pt.clone();
    let mut out = Vec::with_capacity(max_order - 1);
    for _ in 2..=max_order {
        power = &power * &pt;
        out.push(linalg::trace(&power).re);
    }
    Ok(out)
}
