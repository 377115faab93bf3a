use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Largest per-mode occupation for states and Fourier outcomes.
pub const MAX_BOSON_CUTOFF: usize = 3;
/// Largest number of copies in the bosonic check.
pub const MAX_BOSON_COPIES: usize = 3;

/// Two-mode state (one mode on A, one on B) with occupations `0..=support`.
///
/// Basis index is `n_A (support + 1) + n_B`.
#[derive(Clone, Debug, PartialEq)]
pub struct BosonicState {
    rho: CMatrix,
    support: usize,
}

impl BosonicState {
    pub fn new(rho: CMatrix, support: usize) -> Result<Self> {
        if support > MAX_BOSON_CUTOFF {
            return Err(Error::size(format!("occupation support {support} exceeds {MAX_BOSON_CUTOFF}")));
        }
        let d = (support + 1) * (support + 1);
        if rho.shape() != (d, d) {
            return Err(Error::Shape { expected: d, got: rho.nrows() });
        }
        if linalg::hermiticity_defect(&rho) > 1e-10 || (linalg::trace(&rho).re - 1.0).abs() > 1e-10 {
            return Err(Error::input("bosonic state must be Hermitian with unit trace"));
        }
        Ok(BosonicState { rho, support })
    }

    /// `|ψ⟩⟨ψ|` from amplitudes `ψ[n_A (support+1) + n_B]`, normalized.
    pub fn from_pure(amplitudes: &[C64], support: usize) -> Result<Self> {
        let d = (support + 1) * (support + 1);
        if amplitudes.len() != d {
            return Err(Error::Shape { expected: d, got: amplitudes.len() });
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::input("zero or non-finite amplitude vector"));
        }
        let v = CMatrix::from_iterator(d, 1, amplitudes.iter().map(|z| z / norm));
        Self::new(linalg::mul_adjoint(&v, &v), support)
    }

    pub fn vacuum(support: usize) -> Result<Self> {
        let mut amps = vec![C64::new(0.0, 0.0); (support + 1) * (support + 1)];
        amps[0] = C64::new(1.0, 0.0);
        Self::from_pure(&amps, support)
    }

    /// Truncated two-mode squeezed vacuum `∝ Σ_n λ^n |n, n⟩`.
    pub fn two_mode_squeezed(lambda: f64, support: usize) -> Result<Self> {
        let s = support + 1;
        let mut amps = vec![C64::new(0.0, 0.0); s * s];
        for n in 0..s {
            amps[n * s + n] = C64::new(lambda.powi(n as i32), 0.0);
        }
        Self::from_pure(&amps, support)
    }

    /// Truncated product of coherent states `|α⟩ ⊗ |β⟩`.
    pub fn coherent_product(alpha: C64, beta: C64, support: usize) -> Result<Self> {
        let s = support + 1;
        let coeffs = |z: C64| -> Vec<C64> {
            let mut out = Vec::with_capacity(s);
            let mut c = C64::new(1.0, 0.0);
            for n in 0..s {
                if n > 0 {
                    c = c * z / (n as f64).sqrt();
                }
                out.push(c);
            }
            out
        };
        let (ca, cb) = (coeffs(alpha), coeffs(beta));
        let amps: Vec<C64> = (0..s * s).map(|i| ca[i / s] * cb[i % s]).collect();
        Self::from_pure(&amps, support)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn support(&self) -> usize {
        self.support
    }

    /// Spectrum of the partial transpose on the B mode.
    pub fn pt_eigenvalues(&self) -> Result<Vec<f64>> {
        let s = self.support + 1;
        linalg::hermitian_eigenvalues(&linalg::partial_transpose_second(&self.rho, s, s))
    }

    /// `μ_m` on the truncated space.
    pub fn pt_moment(&self, m: usize) -> Result<f64> {
        Ok(self.pt_eigenvalues()?.iter().map(|x| x.powi(m as i32)).sum())
    }

    pub fn log_negativity(&self) -> Result<f64> {
        Ok(self.pt_eigenvalues()?.iter().map(|x| x.abs()).sum::<f64>().log2().max(0.0))
    }
}

/// Outcome of the Fourier-phase protocol against the exact moment.
#[derive(Clone, Debug, PartialEq)]
pub struct BosonicCheck {
    /// `Σ φ p` over outcomes inside the cutoff.
    pub expectation: C64,
    /// `μ_m` from the truncated-space spectrum.
    pub mu: f64,
    pub residual: f64,
    /// Probability weight of the outcomes beyond the cutoff; bounds the residual.
    pub truncation_bound: f64,
}

impl BosonicCheck {
    pub fn passed(&self) -> bool {
        self.residual <= self.truncation_bound + 1e-10
    }
}

/// Fock expansion of `Π_c (ã_c†)^{n_c} / √(n_c!) |0⟩` restricted to
/// per-mode occupations `≤ support`, with `ã_c† = m^{-1/2} Σ_{c'} e^{-i sign 2π c c'/m} a_{c'}†`.
fn fourier_fock_vector(occ: &[usize], sign: f64, support: usize) -> Vec<C64> {
    let m = occ.len();
    // polynomial in creation operators: exponent tuple -> coefficient
    let mut poly: HashMap<Vec<usize>, C64> = HashMap::from([(vec![0; m], C64::new(1.0, 0.0))]);
    let mut norm = 1.0;
    for (c, &n) in occ.iter().enumerate() {
        for k in 1..=n {
            norm *= k as f64;
            let mut next: HashMap<Vec<usize>, C64> = HashMap::new();
            for (exps, coeff) in &poly {
                for cp in 0..m {
                    let phase = C64::from_polar(1.0 / (m as f64).sqrt(), -sign * 2.0 * PI * (c * cp) as f64 / m as f64);
                    let mut e = exps.clone();
                    e[cp] += 1;
                    *next.entry(e).or_insert(C64::new(0.0, 0.0)) += coeff * phase;
                }
            }
            poly = next;
        }
    }
    let s = support + 1;
    let mut out = vec![C64::new(0.0, 0.0); s.pow(m as u32)];
    for (exps, coeff) in poly {
        if exps.iter().any(|&k| k > support) {
            continue;
        }
        // (a†)^k |0⟩ = √(k!) |k⟩
        let fact: f64 = exps.iter().map(|&k| (1..=k).product::<usize>() as f64).product();
        let idx = exps.iter().fold(0, |acc, &k| acc * s + k);
        out[idx] += coeff * fact.sqrt() / norm.sqrt();
    }
    out
}

fn occupations(m: usize, cutoff: usize) -> Vec<Vec<usize>> {
    let base = cutoff + 1;
    (0..base.pow(m as u32))
        .map(|mut i| {
            let mut occ = vec![0; m];
            for slot in occ.iter_mut().rev() {
                *slot = i % base;
                i /= base;
            }
            occ
        })
        .collect()
}

/// Apply `op` to tensor axis `axis` of a `d^m` vector (axis 0 most significant).
fn apply_on_axis(v: &[C64], op: &CMatrix, axis: usize, d: usize, m: usize) -> Vec<C64> {
    let inner = d.pow((m - 1 - axis) as u32);
    let outer = d.pow(axis as u32);
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for o in 0..outer {
        for i in 0..inner {
            for r in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..d {
                    acc += op[(r, c)] * v[(o * d + c) * inner + i];
                }
                out[(o * d + r) * inner + i] = acc;
            }
        }
    }
    out
}

/// Simulate the Fourier-phase measurement of `μ_m` on `m` copies of a
/// two-mode state.
///
/// The A modes of the copies are Fourier transformed, the B modes inverse
/// transformed, and every Fock outcome with all occupations `≤ cutoff` is
/// weighted by `φ = exp(i 2π/m Σ_c c (n_{A,c} + n_{B,c}))`. The weight of
/// the outcomes left out is reported as the truncation bound.
pub fn bosonic_protocol_check(state: &BosonicState, m: usize, cutoff: usize) -> Result<BosonicCheck> {
    if cutoff > MAX_BOSON_CUTOFF {
        return Err(Error::size(format!("cutoff {cutoff} exceeds {MAX_BOSON_CUTOFF}")));
    }
    if !(2..=MAX_BOSON_COPIES).contains(&m) {
        return Err(Error::size(format!("copy count {m} outside 2..={MAX_BOSON_COPIES}")));
    }
    let s = state.support + 1;
    let d = s * s;
    let max_total = m * state.support;
    let outcomes: Vec<(Vec<usize>, C64)> = occupations(m, cutoff)
        .into_iter()
        .filter(|occ| occ.iter().sum::<usize>() <= max_total)
        .map(|occ| {
            let phase: f64 = occ.iter().enumerate().map(|(c, &n)| (c * n) as f64).sum::<f64>() * 2.0 * PI / m as f64;
            (occ, C64::from_polar(1.0, phase))
        })
        .collect();
    let vec_a: Vec<Vec<C64>> = outcomes.iter().map(|(o, _)| fourier_fock_vector(o, 1.0, state.support)).collect();
    let vec_b: Vec<Vec<C64>> = outcomes.iter().map(|(o, _)| fourier_fock_vector(o, -1.0, state.support)).collect();

    // interleave copies: joint index over (n_{A,c} s + n_{B,c}) for c = 0..m
    let joint = |va: &[C64], vb: &[C64]| -> Vec<C64> {
        (0..d.pow(m as u32))
            .map(|idx| {
                let (mut ia, mut ib, mut rest) = (0, 0, idx);
                let mut scale = 1;
                for _ in 0..m {
                    let x = rest % d;
                    rest /= d;
                    ia += (x / s) * scale;
                    ib += (x % s) * scale;
                    scale *= s;
                }
                va[ia] * vb[ib]
            })
            .collect()
    };

    let mut expectation = C64::new(0.0, 0.0);
    let mut captured = 0.0;
    for (va, (_, pa)) in vec_a.iter().zip(&outcomes) {
        for (vb, (_, pb)) in vec_b.iter().zip(&outcomes) {
            let psi = joint(va, vb);
            let mut r = psi.clone();
            for axis in 0..m {
                r = apply_on_axis(&r, &state.rho, axis, d, m);
            }
            let p: f64 = psi.iter().zip(&r).map(|(a, b)| (a.conj() * b).re).sum();
            expectation += pa * pb * p;
            captured += p;
        }
    }
    let mu = state.pt_moment(m)?;
    Ok(BosonicCheck {
        expectation,
        mu,
        residual: (expectation - C64::new(mu, 0.0)).norm(),
        truncation_bound: (1.0 - captured).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fourier_vectors_are_orthonormal_on_full_support() {
        // support large enough to hold every outcome of total number ≤ 2
        let outs: Vec<Vec<usize>> = occupations(2, 2).into_iter().filter(|o| o.iter().sum::<usize>() <= 2).collect();
        let vs: Vec<Vec<C64>> = outs.iter().map(|o| fourier_fock_vector(o, 1.0, 2)).collect();
        for (i, a) in vs.iter().enumerate() {
            for (j, b) in vs.iter().enumerate() {
                let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                assert_abs_diff_eq!(ip.norm(), if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn vacuum_gives_unit_moment() {
        for m in 2..=3 {
            let chk = bosonic_protocol_check(&BosonicState::vacuum(1).unwrap(), m, 0).unwrap();
            assert_abs_diff_eq!(chk.expectation.re, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(chk.mu, 1.0, epsilon = 1e-12);
            assert!(chk.truncation_bound < 1e-12);
        }
    }

    #[test]
    fn squeezed_state_second_moment_is_purity() {
        let st = BosonicState::two_mode_squeezed(0.6, 1).unwrap();
        let purity = linalg::trace(&(st.matrix() * st.matrix())).re;
        let chk = bosonic_protocol_check(&st, 2, 2).unwrap();
        assert!(chk.truncation_bound < 1e-12);
        assert_abs_diff_eq!(chk.expectation.re, purity, epsilon = 1e-10);
        assert_abs_diff_eq!(chk.mu, purity, epsilon = 1e-10);
    }

    #[test]
    fn residual_within_bound_and_bound_shrinks() {
        let st = BosonicState::two_mode_squeezed(0.7, 2).unwrap();
        for m in 2..=3 {
            let mut last = f64::INFINITY;
            for cutoff in 0..=3 {
                let chk = bosonic_protocol_check(&st, m, cutoff).unwrap();
                assert!(chk.passed(), "m={m} cutoff={cutoff}: {chk:?}");
                assert!(chk.truncation_bound <= last + 1e-12);
                last = chk.truncation_bound;
            }
        }
    }

    #[test]
    fn finite_support_converges_exactly() {
        let st = BosonicState::two_mode_squeezed(0.9, 1).unwrap();
        let chk = bosonic_protocol_check(&st, 3, 3).unwrap();
        assert!(chk.truncation_bound < 1e-12);
        assert!(chk.residual < 1e-10);
        assert!(chk.mu < 1.0);
    }

    #[test]
    fn coherent_product_is_separable() {
        let st = BosonicState::coherent_product(C64::new(0.4, 0.1), C64::new(-0.3, 0.2), 2).unwrap();
        assert_abs_diff_eq!(st.log_negativity().unwrap(), 0.0, epsilon = 1e-10);
        let chk = bosonic_protocol_check(&st, 2, 3).unwrap();
        assert!(chk.passed());
        // pure product: μ_2 = 1
        assert_abs_diff_eq!(chk.mu, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn limits_are_enforced() {
        let st = BosonicState::vacuum(1).unwrap();
        assert!(matches!(bosonic_protocol_check(&st, 2, 4), Err(Error::Size(_))));
        assert!(matches!(bosonic_protocol_check(&st, 4, 1), Err(Error::Size(_))));
        assert!(BosonicState::vacuum(4).is_err());
    }
}
