use std::f64::consts::PI;

use crate::chebyshev::estimate_window;
use crate::error::{Error, Result};
use crate::qcore::{pt_spectrum, random_gps, reduce, TriPartition, MAX_DENSE_AB_QUBITS};
use crate::rng::Seed;

use super::stats::Histogram;

/// Limiting partial-transpose density of random tripartite pure states,
/// `ω(λ) = (d²/2πσ²) √(4σ² − (dλ − 1)²)` with `d = 2^{N_A+N_B}` and
/// `σ² = 2^{N_A+N_B−N_C}`. It integrates to `d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SemicircleLaw {
    pub d: f64,
    pub sigma2: f64,
}

impl SemicircleLaw {
    pub fn new(n_ab: usize, n_c: usize) -> Self {
        SemicircleLaw { d: 2f64.powi(n_ab as i32), sigma2: 2f64.powi(n_ab as i32 - n_c as i32) }
    }

    /// Eigenvalue density `ω(λ)`.
    pub fn density(&self, lambda: f64) -> f64 {
        let u = self.d * lambda - 1.0;
        let r = 4.0 * self.sigma2 - u * u;
        if r <= 0.0 {
            0.0
        } else {
            self.d * self.d / (2.0 * PI * self.sigma2) * r.sqrt()
        }
    }

    /// Fraction of eigenvalues below `lambda`.
    pub fn cdf(&self, lambda: f64) -> f64 {
        let x = ((self.d * lambda - 1.0) / (2.0 * self.sigma2.sqrt())).clamp(-1.0, 1.0);
        0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / PI
    }

    /// Edges of the support.
    pub fn support(&self) -> (f64, f64) {
        let s = 2.0 * self.sigma2.sqrt();
        ((1.0 - s) / self.d, (1.0 + s) / self.d)
    }
}

/// Kolmogorov–Smirnov distance between a sample and the law.
pub fn ks_distance(sample: &[f64], law: &SemicircleLaw) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = law.cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Pooled partial-transpose spectra of random pure states against the
/// semicircle law.
#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub law: SemicircleLaw,
    pub histogram: Histogram,
    /// `counts / (instances · bin width)`, comparable with `ω`.
    pub empirical_density: Vec<f64>,
    /// `ω` at the bin centres.
    pub semicircle_density: Vec<f64>,
    pub ks: f64,
    /// Per-instance window half-width `μ_M^{1/M}`.
    pub windows: Vec<f64>,
    /// Eigenvalues falling outside their instance's window.
    pub window_violations: usize,
    pub eigenvalues: Vec<f64>,
}

pub fn spectrum_histogram(
    part: &TriPartition,
    instances: usize,
    bins: usize,
    window_order: usize,
    seed: Seed,
) -> Result<SpectrumReport> {
    if instances == 0 {
        return Err(Error::input("need at least one instance"));
    }
    if part.n_ab() > MAX_DENSE_AB_QUBITS {
        return Err(Error::size(format!("n_a + n_b = {} exceeds {MAX_DENSE_AB_QUBITS}", part.n_ab())));
    }
    let law = SemicircleLaw::new(part.n_ab(), part.n_c);
    let mut eigenvalues = Vec::new();
    let mut windows = Vec::with_capacity(instances);
    let mut window_violations = 0;
    for i in 0..instances {
        let psi = random_gps(part.total(), seed.split(i as u64))?;
        let spec = pt_spectrum(&reduce(&psi, part)?)?;
        let a = estimate_window(&spec.moments(part.n_a, part.n_b, window_order)?)?;
        window_violations += spec.eigenvalues().iter().filter(|x| x.abs() > a).count();
        windows.push(a);
        eigenvalues.extend_from_slice(spec.eigenvalues());
    }
    let (lo, hi) = law.support();
    let e_lo = eigenvalues.iter().copied().fold(lo, f64::min);
    let e_hi = eigenvalues.iter().copied().fold(hi, f64::max);
    let histogram = Histogram::new(&eigenvalues, bins, (e_lo, e_hi))?;
    let width = histogram.edges[1] - histogram.edges[0];
    let empirical_density = histogram.counts.iter().map(|&c| c as f64 / (instances as f64 * width)).collect();
    let semicircle_density = histogram.centers().iter().map(|&x| law.density(x)).collect();
    Ok(SpectrumReport {
        law,
        ks: ks_distance(&eigenvalues, &law),
        histogram,
        empirical_density,
        semicircle_density,
        windows,
        window_violations,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn law_parameters() {
        let law = SemicircleLaw::new(10, 5);
        assert_eq!(law.d, 1024.0);
        assert_eq!(law.sigma2, 32.0);
    }

    #[test]
    fn density_integrates_to_dimension_and_matches_cdf() {
        let law = SemicircleLaw::new(6, 4);
        let (lo, hi) = law.support();
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        // midpoint rule
        let mut acc = 0.0;
        for i in 0..n {
            acc += law.density(lo + (i as f64 + 0.5) * h) * h;
            if i == n / 3 {
                assert_abs_diff_eq!(acc / law.d, law.cdf(lo + (i + 1) as f64 * h), epsilon = 1e-6);
            }
        }
        assert_abs_diff_eq!(acc, law.d, epsilon = 1e-4 * law.d);
        assert_eq!(law.cdf(lo - 1.0), 0.0);
        assert_eq!(law.cdf(hi + 1.0), 1.0);
        // mean eigenvalue is 1/d
        assert_abs_diff_eq!(law.cdf(1.0 / law.d), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let law = SemicircleLaw::new(4, 2);
        // invert the cdf by bisection at mid-quantiles
        let (lo, hi) = law.support();
        let sample: Vec<f64> = (0..200)
            .map(|i| {
                let q = (i as f64 + 0.5) / 200.0;
                let (mut a, mut b) = (lo, hi);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if law.cdf(m) < q {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                a
            })
            .collect();
        assert!(ks_distance(&sample, &law) <= 0.5 / 200.0 + 1e-9);
        assert!(ks_distance(&[hi + 1.0], &law) == 1.0);
    }

    #[test]
    fn small_random_spectra() {
        let part = TriPartition::new(2, 2, 4).unwrap();
        let rep = spectrum_histogram(&part, 5, 20, 10, Seed(1)).unwrap();
        assert_eq!(rep.eigenvalues.len(), 5 * 16);
        assert_eq!(rep.histogram.total(), 80);
        assert_eq!(rep.window_violations, 0);
        assert!(rep.ks < 0.5);
    }
}
