//! Chebyshev estimator of the logarithmic negativity.
//!
//! `|x|` is interpolated on the window `[-a, a]` by a degree-`M` Chebyshev
//! series, the series is rewritten as a polynomial `Σ α_m x^m`, and the
//! trace norm `Σ_k |λ_k| ≈ Σ_m α_m μ_m` follows from the moments alone.
//! The window half-width is `a = μ_m^{1/m}` for the largest even order `m`,
//! an upper bound on the spectral radius of `ρ^{T_B}`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qcore::{MomentVector, MAX_MOMENT_ORDER};

/// A degree-`M` expansion of `|x|` on a window, in both Chebyshev and
/// monomial form.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevExpansion {
    order: usize,
    window: (f64, f64),
    cheb_coeffs: Vec<f64>,
    monomial_coeffs: Vec<f64>,
}

impl ChebyshevExpansion {
    pub fn new(order: usize, window: (f64, f64)) -> Result<Self> {
        let cheb_coeffs = cheb_coeffs_abs(order, window)?;
        let monomial_coeffs = cheb_to_monomial(&cheb_coeffs, window)?;
        Ok(ChebyshevExpansion { order, window, cheb_coeffs, monomial_coeffs })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// `t_0 … t_M`.
    pub fn cheb_coeffs(&self) -> &[f64] {
        &self.cheb_coeffs
    }

    /// `α_0 … α_M`.
    pub fn monomial_coeffs(&self) -> &[f64] {
        &self.monomial_coeffs
    }

    /// `Σ t_m T_m(y(x))` by the Clenshaw recurrence.
    pub fn eval_chebyshev(&self, x: f64) -> f64 {
        let y = to_unit(x, self.window);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &t in self.cheb_coeffs.iter().skip(1).rev() {
            let b0 = t + 2.0 * y * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.cheb_coeffs[0] + y * b1 - b2
    }

    /// `Σ α_m x^m` by Horner's rule.
    pub fn eval_monomial(&self, x: f64) -> f64 {
        self.monomial_coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    /// `Σ_m α_m μ_m` with `μ_0 = 2^{n_a+n_b}` and `μ_1 = 1`.
    pub fn contract(&self, moments: &MomentVector) -> Result<f64> {
        if moments.max_order() < self.order {
            return Err(Error::input(format!(
                "expansion of order {} needs moments up to μ_{}, got μ_{}",
                self.order,
                self.order,
                moments.max_order()
            )));
        }
        let s: f64 = self.monomial_coeffs.iter().enumerate().map(|(m, a)| a * moments.mu(m)).sum();
        if !s.is_finite() {
            return Err(Error::Numerical { message: "non-finite moment contraction".into(), residual: f64::NAN });
        }
        Ok(s)
    }
}

fn check_window(window: (f64, f64)) -> Result<()> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::input(format!("degenerate window [{lo}, {hi}]")));
    }
    if !(lo < 0.0 && hi > 0.0) {
        return Err(Error::input(format!("window [{lo}, {hi}] does not contain 0 in its interior")));
    }
    Ok(())
}

/// Window coordinate `x` mapped onto `[-1, 1]`.
fn to_unit(x: f64, (lo, hi): (f64, f64)) -> f64 {
    (2.0 * x - (lo + hi)) / (hi - lo)
}

/// Chebyshev interpolation coefficients of `|x|` on `window` from the
/// `M + 1` nodes `x_j = cos(π (j + ½)/(M + 1))`.
pub fn cheb_coeffs_abs(order: usize, window: (f64, f64)) -> Result<Vec<f64>> {
    if order < 2 {
        return Err(Error::input(format!("expansion order must be at least 2, got {order}")));
    }
    check_window(window)?;
    let (lo, hi) = window;
    let n = order + 1;
    let nodes: Vec<f64> = (0..n).map(|j| (PI * (j as f64 + 0.5) / n as f64).cos()).collect();
    let f: Vec<f64> = nodes.iter().map(|&x| (lo + (x + 1.0) * (hi - lo) / 2.0).abs()).collect();
    Ok((0..n)
        .map(|m| {
            let norm = if m == 0 { 1.0 } else { 2.0 } / n as f64;
            // T_m(cos θ) = cos(m θ)
            let s: f64 = (0..n).map(|j| f[j] * (PI * m as f64 * (j as f64 + 0.5) / n as f64).cos()).sum();
            norm * s
        })
        .collect())
}

/// Integer coefficients of `T_0 … T_order` in powers of `y`.
fn chebyshev_integer_table(order: usize) -> Vec<Vec<i64>> {
    let mut table: Vec<Vec<i64>> = vec![vec![1], vec![0, 1]];
    for m in 2..=order {
        // T_m = 2 y T_{m-1} - T_{m-2}
        let mut next = vec![0i64; m + 1];
        for (k, &c) in table[m - 1].iter().enumerate() {
            next[k + 1] += 2 * c;
        }
        for (k, &c) in table[m - 2].iter().enumerate() {
            next[k] -= c;
        }
        table.push(next);
    }
    table.truncate(order + 1);
    table
}

/// Monomial coefficients `α_m` of `Σ t_m T_m(y(x))` in the window variable `x`.
pub fn cheb_to_monomial(t: &[f64], window: (f64, f64)) -> Result<Vec<f64>> {
    if t.is_empty() {
        return Err(Error::input("no Chebyshev coefficients"));
    }
    let order = t.len() - 1;
    if order > MAX_MOMENT_ORDER {
        return Err(Error::Capability(format!(
            "monomial conversion is limited to order {MAX_MOMENT_ORDER}, got {order}"
        )));
    }
    check_window(window)?;
    let table = chebyshev_integer_table(order.max(1));
    // coefficients in y
    let mut c = vec![0.0; order + 1];
    for (m, &tm) in t.iter().enumerate() {
        for (k, &ck) in table[m].iter().enumerate() {
            c[k] += tm * ck as f64;
        }
    }
    // y = s x + shift
    let (lo, hi) = window;
    let s = 2.0 / (hi - lo);
    let shift = -(lo + hi) / (hi - lo);
    if shift == 0.0 {
        return Ok(c.iter().enumerate().map(|(k, ck)| ck * s.powi(k as i32)).collect());
    }
    let mut alpha = vec![0.0; order + 1];
    for (k, &ck) in c.iter().enumerate() {
        // (s x + shift)^k = Σ_j C(k, j) s^j shift^{k-j} x^j
        let mut binom = 1.0;
        for (j, a) in alpha.iter_mut().enumerate().take(k + 1) {
            *a += ck * binom * s.powi(j as i32) * shift.powi((k - j) as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    Ok(alpha)
}

/// Symmetric window half-width `a = μ_m^{1/m}` for the largest even order
/// `m` whose moment is positive.
pub fn estimate_window(moments: &MomentVector) -> Result<f64> {
    let mut m = moments.max_order() & !1;
    while m >= 2 {
        let mu = moments.mu(m);
        if mu > 0.0 {
            return Ok(mu.powf(1.0 / m as f64).min(1.0));
        }
        m -= 2;
    }
    Err(Error::Numerical { message: "no positive even moment to bound the spectrum".into(), residual: moments.mu(2) })
}

/// `E^Cheb = log2 max(1, Σ α_m μ_m)` on the window `[-a, a]`.
pub fn cheb_negativity(moments: &MomentVector) -> Result<f64> {
    let a = estimate_window(moments)?;
    cheb_negativity_with_window(moments, (-a, a))
}

/// Estimate with an explicit (possibly asymmetric) window.
pub fn cheb_negativity_with_window(moments: &MomentVector, window: (f64, f64)) -> Result<f64> {
    let exp = ChebyshevExpansion::new(moments.max_order(), window)?;
    Ok(exp.contract(moments)?.max(1.0).log2())
}

/// The same estimate computed from the eigenvalues directly:
/// `log2 max(1, Σ_k p(λ_k))` with the window taken from the moments.
pub fn cheb_negativity_spectral(eigenvalues: &[f64], moments: &MomentVector) -> Result<f64> {
    let a = estimate_window(moments)?;
    let exp = ChebyshevExpansion::new(moments.max_order(), (-a, a))?;
    let s: f64 = eigenvalues.iter().map(|&x| exp.eval_chebyshev(x)).sum();
    Ok(s.max(1.0).log2())
}
