use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::qcore::{pt_moments, DensityMatrix, MomentVector};
use crate::rng::Seed;

use super::permutation::MAX_COPY_QUBITS;

/// Number of repetitions `R` and the seed of the outcome stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShotNoiseConfig {
    pub repetitions: u64,
    pub seed: Seed,
}

impl ShotNoiseConfig {
    pub fn new(repetitions: u64, seed: Seed) -> Result<Self> {
        if repetitions == 0 {
            return Err(Error::input("at least one repetition is required"));
        }
        Ok(ShotNoiseConfig { repetitions, seed })
    }
}

/// `Δμ = sqrt((1 − μ²)/R)`.
pub fn shot_noise_std(mu: f64, repetitions: u64) -> Result<f64> {
    if !mu.is_finite() || mu.abs() > 1.0 {
        return Err(Error::input(format!("moment {mu} outside [-1, 1]")));
    }
    if repetitions == 0 {
        return Err(Error::input("at least one repetition is required"));
    }
    Ok(((1.0 - mu * mu).max(0.0) / repetitions as f64).sqrt())
}

/// Mean of `R` outcomes `±1` with `P(+1) = (1 + μ)/2`.
pub fn sample_moment<R: Rng + ?Sized>(mu: f64, repetitions: u64, rng: &mut R) -> Result<f64> {
    if !mu.is_finite() || mu.abs() > 1.0 {
        return Err(Error::input(format!("moment {mu} outside [-1, 1]")));
    }
    let p = ((1.0 + mu) / 2.0).clamp(0.0, 1.0);
    let plus = Binomial::new(repetitions, p).map_err(|e| Error::input(e.to_string()))?.sample(rng);
    Ok((2.0 * plus as f64 - repetitions as f64) / repetitions as f64)
}

/// Noisy moments together with their predicted standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyMoments {
    pub moments: MomentVector,
    /// `Δμ_m` for `m = 2..=M`, evaluated at the exact moments.
    pub std_errors: Vec<f64>,
    pub repetitions: u64,
}

/// Replace each exact `μ_m` by the sample mean of `R` two-point outcomes.
pub fn measure_moments_noisy(rho: &DensityMatrix, max_order: usize, cfg: &ShotNoiseConfig) -> Result<NoisyMoments> {
    let exact = pt_moments(rho, max_order)?;
    noisy_from_exact(&exact, cfg)
}

/// Shot-noise version of a known moment vector.
pub fn noisy_from_exact(exact: &MomentVector, cfg: &ShotNoiseConfig) -> Result<NoisyMoments> {
    if cfg.repetitions == 0 {
        return Err(Error::input("at least one repetition is required"));
    }
    let mut rng = cfg.seed.rng();
    let mut values = Vec::with_capacity(exact.moments().len());
    let mut errs = Vec::with_capacity(exact.moments().len());
    for &mu in exact.moments() {
        // rounding can push |μ| a hair above one for pure states
        let mu = mu.clamp(-1.0, 1.0);
        values.push(sample_moment(mu, cfg.repetitions, &mut rng)?);
        errs.push(shot_noise_std(mu, cfg.repetitions)?);
    }
    Ok(NoisyMoments {
        moments: MomentVector::measured(exact.n_a(), exact.n_b(), values)?,
        std_errors: errs,
        repetitions: cfg.repetitions,
    })
}

/// Dense swap of copies `c` and `d` of an `n`-qubit register, `m` copies.
fn copy_swap(n: usize, m: usize, c: usize, d: usize) -> CMatrix {
    let dd = 1usize << n;
    let dim = dd.pow(m as u32);
    let mut out = CMatrix::zeros(dim, dim);
    let shift = |k: usize| (m - 1 - k) * n;
    for x in 0..dim {
        let xc = (x >> shift(c)) & (dd - 1);
        let xd = (x >> shift(d)) & (dd - 1);
        let y = x & !((dd - 1) << shift(c)) & !((dd - 1) << shift(d)) | (xc << shift(d)) | (xd << shift(c));
        out[(y, x)] = C64::new(1.0, 0.0);
    }
    out
}

fn register_power(rho: &CMatrix, m: usize) -> CMatrix {
    (1..m).fold(rho.clone(), |acc, _| acc.kronecker(rho))
}

fn check_chain(rho: &CMatrix, m: usize) -> Result<usize> {
    let dim = rho.nrows();
    if !dim.is_power_of_two() || dim < 2 || rho.ncols() != dim {
        return Err(Error::Shape { expected: dim.next_power_of_two().max(2), got: dim });
    }
    let n = dim.trailing_zeros() as usize;
    if m < 2 {
        return Err(Error::input("at least two copies are needed"));
    }
    if n * m > MAX_COPY_QUBITS {
        return Err(Error::size(format!("{m} copies of {n} qubits exceed the brute-force cap")));
    }
    Ok(n)
}

/// Exact mean of the outcome product of sequential ST measurements of
/// `S^{1,2}, S^{2,3}, …, S^{m-1,m}` on `m` copies of one register.
///
/// Each step applies `ρ ↦ Σ_β β Π_β ρ Π_β` with `Π_± = (1 ± S)/2`; the
/// trace of the result is the mean of `β_1 ⋯ β_{m-1}`, which equals `Tr ρ^m`.
pub fn st_chain_mean(rho: &CMatrix, m: usize) -> Result<f64> {
    let n = check_chain(rho, m)?;
    let mut state = register_power(rho, m);
    let dim = state.nrows();
    let id = CMatrix::identity(dim, dim);
    for c in 0..m - 1 {
        let s = copy_swap(n, m, c, c + 1);
        let plus = (&id + &s) * C64::new(0.5, 0.0);
        let minus = (&id - &s) * C64::new(0.5, 0.0);
        state = &plus * &state * &plus - &minus * &state * &minus;
    }
    Ok(state.trace().re)
}

/// Sample `shots` runs of the sequential ST chain, each returning the
/// product of its `±1` outcomes. Returns the individual products.
pub fn sample_st_chain(rho: &CMatrix, m: usize, shots: usize, seed: Seed) -> Result<Vec<f64>> {
    let n = check_chain(rho, m)?;
    let start = register_power(rho, m);
    let dim = start.nrows();
    let id = CMatrix::identity(dim, dim);
    let projectors: Vec<(CMatrix, CMatrix)> = (0..m - 1)
        .map(|c| {
            let s = copy_swap(n, m, c, c + 1);
            ((&id + &s) * C64::new(0.5, 0.0), (&id - &s) * C64::new(0.5, 0.0))
        })
        .collect();
    let mut rng = seed.rng();
    let mut out = Vec::with_capacity(shots);
    for _ in 0..shots {
        let mut state = start.clone();
        let mut product = 1.0;
        for (plus, minus) in &projectors {
            let post_plus = plus * &state * plus;
            let p_plus = post_plus.trace().re.clamp(0.0, 1.0);
            if rng.gen::<f64>() < p_plus {
                state = post_plus / C64::new(p_plus, 0.0);
            } else {
                let post = minus * &state * minus;
                let p = post.trace().re;
                state = post / C64::new(p, 0.0);
                product = -product;
            }
        }
        out.push(product);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{random_gps, reduce, PureState, TriPartition};
    use approx::assert_abs_diff_eq;

    #[test]
    fn predicted_errors() {
        assert_abs_diff_eq!(shot_noise_std(0.0, 100).unwrap(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(shot_noise_std(0.6, 100).unwrap(), 0.08, epsilon = 1e-15);
        assert!(shot_noise_std(1.2, 100).is_err());
        assert!(ShotNoiseConfig::new(0, Seed(1)).is_err());
    }

    #[test]
    fn bell_purity_measurement() {
        let rho = DensityMatrix::from_pure(&PureState::bell(), 1).unwrap();
        let cfg = ShotNoiseConfig::new(1_000_000, Seed(3)).unwrap();
        let noisy = measure_moments_noisy(&rho, 2, &cfg).unwrap();
        // μ_2 = 1 has zero variance; bound with a floor so the check is meaningful
        let tol = 5.0 * noisy.std_errors[0].max(1.0 / 1000.0);
        assert!((noisy.moments.mu(2) - 1.0).abs() <= tol);
    }

    #[test]
    fn empirical_spread_matches_prediction() {
        for &mu in &[0.0, 0.5, 0.9] {
            let r = 400;
            let mut rng = Seed(17).split((mu * 10.0) as u64).rng();
            let xs: Vec<f64> = (0..2000).map(|_| sample_moment(mu, r, &mut rng).unwrap()).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            let want = shot_noise_std(mu, r).unwrap();
            assert!((var.sqrt() / want - 1.0).abs() < 0.1, "mu={mu}: {} vs {want}", var.sqrt());
            assert!((mean - mu).abs() < 5.0 * want / (xs.len() as f64).sqrt());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let rho = reduce(&random_gps(4, Seed(1)).unwrap(), &TriPartition::new(1, 1, 2).unwrap()).unwrap();
        let cfg = ShotNoiseConfig::new(500, Seed(9)).unwrap();
        assert_eq!(measure_moments_noisy(&rho, 4, &cfg).unwrap(), measure_moments_noisy(&rho, 4, &cfg).unwrap());
    }

    #[test]
    fn st_chain_mean_is_trace_of_power() {
        let psi = random_gps(3, Seed(21)).unwrap();
        let rho = reduce(&psi, &TriPartition::new(1, 1, 1).unwrap()).unwrap();
        let r = rho.matrix();
        for m in 2..=4 {
            let want = (1..m).fold(r.clone(), |acc, _| &acc * r).trace().re;
            assert_abs_diff_eq!(st_chain_mean(r, m).unwrap(), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn sampled_st_chain_is_two_point_with_exact_variance() {
        let psi = random_gps(3, Seed(22)).unwrap();
        let rho = reduce(&psi, &TriPartition::new(1, 1, 1).unwrap()).unwrap();
        let r = rho.matrix();
        let mu = st_chain_mean(r, 3).unwrap();
        let shots = sample_st_chain(r, 3, 4000, Seed(5)).unwrap();
        assert!(shots.iter().all(|&x| x == 1.0 || x == -1.0));
        let mean = shots.iter().sum::<f64>() / shots.len() as f64;
        let err = shot_noise_std(mu, shots.len() as u64).unwrap();
        assert!((mean - mu).abs() < 5.0 * err, "{mean} vs {mu}");
    }
}
