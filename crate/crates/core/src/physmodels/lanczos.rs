use num_complex::Complex64 as C64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::qcore::PureState;
use crate::rng::Seed;

use super::hamiltonian::SpinHamiltonian;
use super::krylov::{norm, reorthogonalize, sub_scaled, LanczosBasis};

/// Gap below which the ground space is reported as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanczosConfig {
    /// Krylov vectors kept per restart cycle.
    pub krylov_dim: usize,
    /// Required `‖Hψ − Eψ‖`.
    pub tolerance: f64,
    pub max_restarts: usize,
    /// Also resolve the next level to measure the gap.
    pub check_degeneracy: bool,
    /// Seed of the random start vector.
    pub seed: Seed,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        LanczosConfig { krylov_dim: 40, tolerance: 1e-8, max_restarts: 2000, check_degeneracy: true, seed: Seed(0x6c61_6e63) }
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub state: PureState,
    pub energy: f64,
    pub residual: f64,
    /// Distance to the next level, when it was resolved.
    pub gap: Option<f64>,
    /// True if the gap is below [`DEGENERACY_GAP`]; `state` is then one
    /// member of the ground space.
    pub degenerate: bool,
}

pub fn ground_state(h: &SpinHamiltonian) -> Result<GroundState> {
    ground_state_with(h, &LanczosConfig::default())
}

/// Lowest eigenpair by explicitly restarted Lanczos.
pub fn ground_state_with(h: &SpinHamiltonian, cfg: &LanczosConfig) -> Result<GroundState> {
    if cfg.krylov_dim < 2 || !cfg.tolerance.is_finite() || cfg.tolerance <= 0.0 {
        return Err(Error::input("Lanczos needs a subspace of at least 2 and a positive tolerance"));
    }
    let start = random_vector(h.dim(), cfg.seed);
    let (psi, e0, res) = lowest(h, start, &[], cfg, cfg.tolerance)?;
    let gap = if cfg.check_degeneracy && h.dim() > 1 {
        let mut start = random_vector(h.dim(), cfg.seed.split(1));
        reorthogonalize(&mut start, std::slice::from_ref(&psi));
        // Eigenvalue error is quadratic in the residual, so a looser
        // tolerance still resolves the gap far below the threshold.
        let loose = (cfg.tolerance * 100.0).max(1e-7);
        let (_, e1, _) = lowest(h, start, std::slice::from_ref(&psi), cfg, loose)?;
        Some(e1 - e0)
    } else {
        None
    };
    Ok(GroundState {
        state: PureState::new(psi)?,
        energy: e0,
        residual: res,
        gap,
        degenerate: gap.is_some_and(|g| g < DEGENERACY_GAP),
    })
}

fn random_vector(dim: usize, seed: Seed) -> Vec<C64> {
    let mut rng = seed.rng();
    (0..dim)
        .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect()
}

/// Lowest eigenpair of `H` restricted to the complement of `deflate`.
fn lowest(
    h: &SpinHamiltonian,
    mut v: Vec<C64>,
    deflate: &[Vec<C64>],
    cfg: &LanczosConfig,
    tol: f64,
) -> Result<(Vec<C64>, f64, f64)> {
    let dim = cfg.krylov_dim.min(h.dim() - deflate.len());
    if dim == 0 {
        return Err(Error::input("no space left after deflation"));
    }
    let mut last_res = f64::INFINITY;
    for _ in 0..cfg.max_restarts {
        let basis = LanczosBasis::build(h, &v, dim, deflate);
        let eig = basis.ritz();
        let j = eig.eigenvalues.argmin().0;
        let e = eig.eigenvalues[j];
        let coeffs: Vec<C64> = eig.eigenvectors.column(j).iter().map(|&c| C64::new(c, 0.0)).collect();
        let mut psi = basis.combine(&coeffs);
        let n = norm(&psi);
        psi.iter_mut().for_each(|x| *x /= n);
        let estimate = basis.residual_coupling() * eig.eigenvectors[(basis.dim() - 1, j)].abs();
        if estimate < tol || basis.invariant {
            let res = true_residual(h, &psi, e, deflate);
            if res < tol || basis.invariant {
                return Ok((psi, e, res));
            }
        }
        last_res = estimate;
        v = psi;
    }
    Err(Error::Numerical { message: format!("Lanczos did not converge in {} restarts", cfg.max_restarts), residual: last_res })
}

/// `‖P(Hψ − Eψ)‖`, with `P` projecting out `deflate`.
fn true_residual(h: &SpinHamiltonian, psi: &[C64], e: f64, deflate: &[Vec<C64>]) -> f64 {
    let mut r = h.apply(psi);
    sub_scaled(&mut r, C64::new(e, 0.0), psi);
    reorthogonalize(&mut r, deflate);
    norm(&r)
}
