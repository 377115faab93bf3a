//! Open-boundary matrix-product states.
//!
//! A state on `N` qubits is stored as one pair of matrices `(A^0, A^1)` per
//! site; the amplitude of `|i_1 … i_N⟩` is the `1×1` product
//! `A^{i_1} ⋯ A^{i_N}`. Reduced density matrices of a contiguous AB window
//! are obtained from left and right environments without ever forming the
//! full `2^N` vector.

use num_complex::Complex64 as C64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::qcore::{hermitize, DensityMatrix, PureState, TriPartition};
use crate::rng::Seed;

pub const MAX_MPS_SITES: usize = 64;
pub const MAX_MPS_BOND: usize = 64;
/// Largest chain converted to a dense vector.
pub const MAX_DENSE_MPS_SITES: usize = 20;
/// Cap on the number of entries of the window amplitude matrix.
const MAX_WINDOW_ENTRIES: usize = 1 << 26;

const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct MPSState {
    tensors: Vec<[CMatrix; 2]>,
    bond_dim: usize,
}

impl MPSState {
    /// Validate shapes: open boundaries and chained bond dimensions.
    pub fn new(tensors: Vec<[CMatrix; 2]>) -> Result<Self> {
        let n = tensors.len();
        if n == 0 || n > MAX_MPS_SITES {
            return Err(Error::size(format!("MPS needs 1..={MAX_MPS_SITES} sites, got {n}")));
        }
        let mut left = 1;
        let mut bond_dim = 1;
        for (j, [a0, a1]) in tensors.iter().enumerate() {
            if a0.shape() != a1.shape() {
                return Err(Error::input(format!("site {j}: physical components differ in shape")));
            }
            if a0.nrows() != left {
                return Err(Error::Shape { expected: left, got: a0.nrows() });
            }
            left = a0.ncols();
            bond_dim = bond_dim.max(left);
        }
        if left != 1 {
            return Err(Error::Shape { expected: 1, got: left });
        }
        Ok(MPSState { tensors, bond_dim })
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    /// Largest bond dimension along the chain.
    pub fn bond_dim(&self) -> usize {
        self.bond_dim
    }

    pub fn site(&self, j: usize) -> &[CMatrix; 2] {
        &self.tensors[j]
    }

    /// `ln ⟨ψ|ψ⟩`, accumulated with rescaling so long chains cannot overflow.
    pub fn log_norm_sqr(&self) -> f64 {
        let mut env = CMatrix::identity(1, 1);
        let mut log = 0.0;
        for site in &self.tensors {
            env = left_step(&env, site);
            let s = linalg::trace(&env).re;
            env /= C64::new(s, 0.0);
            log += s.ln();
        }
        log + linalg::trace(&env).re.ln()
    }

    pub fn norm(&self) -> f64 {
        (0.5 * self.log_norm_sqr()).exp()
    }

    /// Rescale every tensor by the same factor so that `⟨ψ|ψ⟩ = 1`.
    pub fn normalize(&mut self) {
        let n = self.tensors.len() as f64;
        let scale = C64::new((-0.5 * self.log_norm_sqr() / n).exp(), 0.0);
        for [a0, a1] in &mut self.tensors {
            *a0 *= scale;
            *a1 *= scale;
        }
    }
}

/// `L' = Σ_i A_i† L A_i`.
fn left_step(env: &CMatrix, site: &[CMatrix; 2]) -> CMatrix {
    site.iter().map(|a| a.adjoint() * env * a).fold(CMatrix::zeros(site[0].ncols(), site[0].ncols()), |acc, x| acc + x)
}

/// `R' = Σ_i A_i R A_i†`.
fn right_step(env: &CMatrix, site: &[CMatrix; 2]) -> CMatrix {
    site.iter().map(|a| a * env * a.adjoint()).fold(CMatrix::zeros(site[0].nrows(), site[0].nrows()), |acc, x| acc + x)
}

fn bond_dims(n_sites: usize, bond_dim: usize) -> Vec<usize> {
    (0..=n_sites).map(|j| if j == 0 || j == n_sites { 1 } else { bond_dim }).collect()
}

/// Random MPS with i.i.d. complex-normal tensor entries, then normalized.
///
/// All internal bonds have dimension `bond_dim`; the boundary bonds are 1.
pub fn random_mps(n_sites: usize, bond_dim: usize, seed: Seed) -> Result<MPSState> {
    if !(1..=MAX_MPS_SITES).contains(&n_sites) {
        return Err(Error::size(format!("MPS needs 1..={MAX_MPS_SITES} sites, got {n_sites}")));
    }
    if !(1..=MAX_MPS_BOND).contains(&bond_dim) {
        return Err(Error::size(format!("bond dimension must be 1..={MAX_MPS_BOND}, got {bond_dim}")));
    }
    let mut rng = seed.rng();
    let dims = bond_dims(n_sites, bond_dim);
    let mut sample = |r: usize, c: usize| {
        CMatrix::from_fn(r, c, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
    };
    let tensors = (0..n_sites)
        .map(|j| {
            let a0 = sample(dims[j], dims[j + 1]);
            let a1 = sample(dims[j], dims[j + 1]);
            [a0, a1]
        })
        .collect();
    let mut mps = MPSState::new(tensors)?;
    mps.normalize();
    Ok(mps)
}

/// W state `(|10…0⟩ + … + |0…01⟩)/√N` as a bond-dimension-2 MPS.
///
/// The bond index records whether the single excitation has been placed.
pub fn w_state_mps(n_sites: usize) -> Result<MPSState> {
    if !(2..=MAX_MPS_SITES).contains(&n_sites) {
        return Err(Error::size(format!("W state needs 2..={MAX_MPS_SITES} sites, got {n_sites}")));
    }
    let c = |x: f64| C64::new(x, 0.0);
    let tensors = (0..n_sites)
        .map(|j| {
            if j == 0 {
                [CMatrix::from_row_slice(1, 2, &[c(1.0), c(0.0)]), CMatrix::from_row_slice(1, 2, &[c(0.0), c(1.0)])]
            } else if j == n_sites - 1 {
                [CMatrix::from_row_slice(2, 1, &[c(0.0), c(1.0)]), CMatrix::from_row_slice(2, 1, &[c(1.0), c(0.0)])]
            } else {
                [CMatrix::identity(2, 2), CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)])]
            }
        })
        .collect();
    let mut mps = MPSState::new(tensors)?;
    mps.normalize();
    Ok(mps)
}

/// Full amplitude vector by left-to-right contraction.
pub fn mps_to_dense(mps: &MPSState) -> Result<PureState> {
    let n = mps.n_sites();
    if n > MAX_DENSE_MPS_SITES {
        return Err(Error::size(format!("{n} sites exceeds the dense conversion cap of {MAX_DENSE_MPS_SITES}")));
    }
    // rows: physical prefix, columns: open right bond
    let mut psi = CMatrix::identity(1, 1);
    for site in &mps.tensors {
        let (a0, a1) = (&site[0], &site[1]);
        let p0 = &psi * a0;
        let p1 = &psi * a1;
        psi = CMatrix::from_fn(2 * psi.nrows(), a0.ncols(), |row, c| {
            if row % 2 == 0 {
                p0[(row / 2, c)]
            } else {
                p1[(row / 2, c)]
            }
        });
    }
    PureState::new(psi.column(0).iter().copied().collect())
}

/// `ρ_AB` of the window `[offset, offset + n_a + n_b)` by environment
/// contraction.
///
/// With `L = X X†` and `R = Y Y†` the reduced matrix is
/// `ρ(s, s') = Tr[L M_s R M_{s'}†] = ⟨vec(X† M_{s'} Y), vec(X† M_s Y)⟩`,
/// where `M_s` is the product of window tensors for configuration `s`.
pub fn rho_ab_from_mps(mps: &MPSState, part: &TriPartition) -> Result<DensityMatrix> {
    part.check(mps.n_sites())?;
    let start = part.offset;
    let stop = start + part.n_ab();

    let mut left = CMatrix::identity(1, 1);
    for site in &mps.tensors[..start] {
        left = left_step(&left, site);
    }
    let mut right = CMatrix::identity(1, 1);
    for site in mps.tensors[stop..].iter().rev() {
        right = right_step(&right, site);
    }
    let x = psd_factor(&left)?;
    let y = psd_factor(&right)?;

    let d_ab = 1usize << part.n_ab();
    let cols = x.ncols() * y.ncols();
    let width = mps.tensors[start..stop].iter().map(|s| s[0].ncols()).max().unwrap_or(1);
    if d_ab.saturating_mul(x.ncols().max(cols).max(width * x.ncols())) > MAX_WINDOW_ENTRIES {
        return Err(Error::size(format!("window of {} sites with bond {} is too large", part.n_ab(), mps.bond_dim)));
    }

    // rows of `cur`: window prefix configurations; each row is X† M_prefix
    // flattened column-major as (k, bond)
    let k = x.ncols();
    let mut cur: Vec<CMatrix> = vec![x.adjoint()];
    for site in &mps.tensors[start..stop] {
        let mut next = Vec::with_capacity(cur.len() * 2);
        for m in &cur {
            next.push(m * &site[0]);
            next.push(m * &site[1]);
        }
        cur = next;
    }
    let g = CMatrix::from_fn(d_ab, cols, |s, col| {
        let m = &cur[s];
        let (kk, yy) = (col % k, col / k);
        (0..m.ncols()).map(|b| m[(kk, b)] * y[(b, yy)]).sum()
    });
    let rho = linalg::mul_adjoint(&g, &g);
    let tr = linalg::trace(&rho).re;
    if (tr - 1.0).abs() > NORM_TOL {
        return Err(Error::Numerical { message: "MPS is not normalized".into(), residual: (tr - 1.0).abs() });
    }
    Ok(DensityMatrix::from_parts(hermitize(rho), part.n_a, part.n_b))
}

/// `X` with `X X† = env`, dropping the numerically null eigenspace.
fn psd_factor(env: &CMatrix) -> Result<CMatrix> {
    let (w, v) = linalg::hermitian_eigh(&hermitize(env.clone()))?;
    let top = w.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..w.len()).filter(|&i| w[i] > top * 1e-15).collect();
    let keep = if keep.is_empty() { vec![w.len() - 1] } else { keep };
    Ok(CMatrix::from_fn(env.nrows(), keep.len(), |r, c| v[(r, keep[c])] * w[keep[c]].max(0.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{log_negativity, reduce};
    use approx::assert_abs_diff_eq;

    /// Amplitude of one basis configuration by a direct matrix product.
    fn amplitude(mps: &MPSState, index: usize) -> C64 {
        let n = mps.n_sites();
        let mut acc = CMatrix::identity(1, 1);
        for j in 0..n {
            let bit = (index >> (n - 1 - j)) & 1;
            acc *= &mps.site(j)[bit];
        }
        acc[(0, 0)]
    }

    #[test]
    fn random_mps_is_normalized_and_shaped() {
        let mps = random_mps(12, 5, Seed(1)).unwrap();
        assert_abs_diff_eq!(mps.norm(), 1.0, epsilon = 1e-10);
        assert_eq!(mps.bond_dim(), 5);
        assert_eq!(mps.site(0)[0].nrows(), 1);
        assert_eq!(mps.site(11)[1].ncols(), 1);
    }

    #[test]
    fn long_chain_normalizes_without_overflow() {
        let mps = random_mps(64, 64, Seed(2)).unwrap();
        assert_abs_diff_eq!(mps.log_norm_sqr(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn size_limits() {
        assert!(matches!(random_mps(65, 2, Seed(0)), Err(Error::Size(_))));
        assert!(matches!(random_mps(4, 65, Seed(0)), Err(Error::Size(_))));
        let big = random_mps(21, 1, Seed(0)).unwrap();
        assert!(matches!(mps_to_dense(&big), Err(Error::Size(_))));
    }

    #[test]
    fn shape_validation() {
        let bad = vec![[CMatrix::zeros(1, 2), CMatrix::zeros(1, 2)], [CMatrix::zeros(3, 1), CMatrix::zeros(3, 1)]];
        assert!(MPSState::new(bad).is_err());
    }

    #[test]
    fn dense_conversion_matches_direct_contraction() {
        let mps = random_mps(10, 4, Seed(3)).unwrap();
        let dense = mps_to_dense(&mps).unwrap();
        assert_abs_diff_eq!(dense.norm(), 1.0, epsilon = 1e-12);
        // normalization in `PureState::new` is a no-op up to rounding
        for (i, a) in dense.amplitudes().iter().enumerate() {
            assert!((a - amplitude(&mps, i)).norm() < 1e-10);
        }
    }

    #[test]
    fn w_state_amplitudes() {
        let dense = mps_to_dense(&w_state_mps(3).unwrap()).unwrap();
        let s = 1.0 / 3f64.sqrt();
        let want = [0.0, s, s, 0.0, s, 0.0, 0.0, 0.0];
        for (a, w) in dense.amplitudes().iter().zip(want) {
            assert_abs_diff_eq!(a.re, w, epsilon = 1e-14);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn product_mps_has_no_entanglement() {
        let mps = random_mps(4, 1, Seed(4)).unwrap();
        let dense = mps_to_dense(&mps).unwrap();
        for cut in 1..4 {
            assert!(dense.entanglement_entropy(cut).unwrap().abs() < 1e-10);
        }
        let rho = rho_ab_from_mps(&mps, &TriPartition::with_offset(1, 2, 1, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(log_negativity(&rho).unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(crate::qcore::purity(&rho), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn entropy_bounded_by_bond_dimension() {
        for i in 0..50 {
            let d = 1 + (i % 4) as usize;
            let mps = random_mps(8, d, Seed(50).split(i)).unwrap();
            let dense = mps_to_dense(&mps).unwrap();
            for cut in 1..8 {
                assert!(dense.entanglement_entropy(cut).unwrap() <= (d as f64).log2() + 1e-9);
            }
        }
    }

    #[test]
    fn window_reduction_matches_dense_reduction() {
        let mps = random_mps(10, 3, Seed(5)).unwrap();
        let dense = mps_to_dense(&mps).unwrap();
        for offset in [0, 3, 6] {
            let part = TriPartition::with_offset(2, 2, 6, offset).unwrap();
            let a = rho_ab_from_mps(&mps, &part).unwrap();
            let b = reduce(&dense, &part).unwrap();
            assert!(linalg::max_abs(&(a.matrix() - b.matrix())) < 1e-10);
            assert_abs_diff_eq!(a.trace(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn full_window_is_pure() {
        let mps = random_mps(6, 4, Seed(6)).unwrap();
        let rho = rho_ab_from_mps(&mps, &TriPartition::new(3, 3, 0).unwrap()).unwrap();
        assert_abs_diff_eq!(crate::qcore::purity(&rho), 1.0, epsilon = 1e-10);
    }
}
