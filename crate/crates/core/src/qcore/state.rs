use num_complex::Complex64 as C64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::rng::Seed;

use super::DensityMatrix;

/// Largest register accepted by the dense state-vector code.
pub const MAX_STATE_QUBITS: usize = 24;
/// Largest `n_a + n_b` for which a dense `ρ_AB` is formed.
pub const MAX_DENSE_AB_QUBITS: usize = 14;

#[cfg(test)]
const NORM_TOL: f64 = 1e-12;

/// Normalized pure state of `n` qubits.
///
/// Qubit 0 is the most significant bit of the amplitude index, so the
/// leftmost site of a chain is the leading tensor factor.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
    n_qubits: usize,
}

impl PureState {
    /// Wrap an amplitude vector, normalizing it.
    pub fn new(mut amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::size(format!("amplitude count {len} is not 2^N with N >= 1")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_STATE_QUBITS {
            return Err(Error::size(format!("{n_qubits} qubits exceeds the cap of {MAX_STATE_QUBITS}")));
        }
        let norm = norm(&amplitudes);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::input("state vector has zero or non-finite norm"));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(PureState { amplitudes, n_qubits })
    }

    /// Build from real amplitudes (normalized).
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Computational basis state `|bits⟩`, `bits[0]` being qubit 0.
    pub fn basis(bits: &[u8]) -> Result<Self> {
        let n = bits.len();
        if n == 0 || n > MAX_STATE_QUBITS {
            return Err(Error::size(format!("basis state with {n} qubits")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[basis_index(bits)] = C64::new(1.0, 0.0);
        Ok(PureState { amplitudes: amps, n_qubits: n })
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn bell() -> Self {
        Self::from_real(&[1.0, 0.0, 0.0, 1.0]).expect("valid Bell state")
    }

    /// `(|0…0⟩ + |1…1⟩)/√2` on `n ≥ 2` qubits.
    pub fn ghz(n: usize) -> Result<Self> {
        if !(2..=MAX_STATE_QUBITS).contains(&n) {
            return Err(Error::size(format!("GHZ state needs 2..={MAX_STATE_QUBITS} qubits, got {n}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        amps[(1 << n) - 1] = C64::new(1.0, 0.0);
        Self::new(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        assert_eq!(self.n_qubits, other.n_qubits, "register sizes differ");
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// Von Neumann entropy (bits) of the first `cut` qubits.
    pub fn entanglement_entropy(&self, cut: usize) -> Result<f64> {
        if cut == 0 || cut >= self.n_qubits {
            return Ok(0.0);
        }
        let dl = 1usize << cut;
        let dr = 1usize << (self.n_qubits - cut);
        // Gram matrix on the smaller side
        let m = CMatrix::from_fn(dl, dr, |l, r| self.amplitudes[l * dr + r]);
        let gram = if dl <= dr { linalg::mul_adjoint(&m, &m) } else { linalg::mul_adjoint(&m.adjoint(), &m.adjoint()) };
        let probs = linalg::hermitian_eigenvalues(&gram)?;
        Ok(probs.iter().filter(|&&p| p > 1e-300).map(|&p| -p * p.log2()).sum::<f64>().max(0.0))
    }
}

pub(crate) fn basis_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1))
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Contiguous tri-partition of a chain.
///
/// Sites are laid out as `[C_left | A | B | C_right]`, where `offset` is the
/// size of `C_left` (zero puts A at the start of the chain).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TriPartition {
    pub n_a: usize,
    pub n_b: usize,
    pub n_c: usize,
    pub offset: usize,
}

impl TriPartition {
    pub fn new(n_a: usize, n_b: usize, n_c: usize) -> Result<Self> {
        Self::with_offset(n_a, n_b, n_c, 0)
    }

    pub fn with_offset(n_a: usize, n_b: usize, n_c: usize, offset: usize) -> Result<Self> {
        if n_a == 0 || n_b == 0 {
            return Err(Error::input(format!("subsystems must be non-empty (n_a={n_a}, n_b={n_b})")));
        }
        if offset > n_c {
            return Err(Error::input(format!("offset {offset} exceeds environment size {n_c}")));
        }
        Ok(TriPartition { n_a, n_b, n_c, offset })
    }

    /// Place the AB window in the middle of the chain.
    pub fn centered(n_a: usize, n_b: usize, n_c: usize) -> Result<Self> {
        Self::with_offset(n_a, n_b, n_c, n_c / 2)
    }

    pub fn n_ab(&self) -> usize {
        self.n_a + self.n_b
    }

    pub fn total(&self) -> usize {
        self.n_a + self.n_b + self.n_c
    }

    /// Environment sites right of B.
    pub fn right(&self) -> usize {
        self.n_c - self.offset
    }

    pub(crate) fn check(&self, n_qubits: usize) -> Result<()> {
        if self.total() != n_qubits {
            return Err(Error::input(format!(
                "partition {}+{}+{} does not cover {n_qubits} qubits",
                self.n_a, self.n_b, self.n_c
            )));
        }
        if self.n_ab() > MAX_DENSE_AB_QUBITS {
            return Err(Error::size(format!(
                "n_a + n_b = {} exceeds the dense cap of {MAX_DENSE_AB_QUBITS}",
                self.n_ab()
            )));
        }
        Ok(())
    }
}

/// Normalized complex-normal random state on `n_qubits` qubits.
pub fn random_gps(n_qubits: usize, seed: Seed) -> Result<PureState> {
    if !(1..=MAX_STATE_QUBITS).contains(&n_qubits) {
        return Err(Error::size(format!("random state needs 1..={MAX_STATE_QUBITS} qubits, got {n_qubits}")));
    }
    let mut rng = seed.rng();
    let amps: Vec<C64> = (0..1usize << n_qubits)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect();
    PureState::new(amps)
}

/// `ρ_AB = Tr_C |ψ⟩⟨ψ|`.
pub fn reduce(state: &PureState, part: &TriPartition) -> Result<DensityMatrix> {
    part.check(state.n_qubits())?;
    let d_ab = 1usize << part.n_ab();
    let d_right = 1usize << part.right();
    let d_left = 1usize << part.offset;
    let d_env = d_left * d_right;
    let amps = state.amplitudes();
    // T[ab, env] with env = (left, right)
    let t = CMatrix::from_fn(d_ab, d_env, |ab, env| {
        let (l, r) = (env / d_right, env % d_right);
        amps[(l * d_ab + ab) * d_right + r]
    });
    let rho = linalg::mul_adjoint(&t, &t);
    Ok(DensityMatrix::from_parts(hermitize(rho), part.n_a, part.n_b))
}

/// `(m + m^†)/2`, removing rounding asymmetry.
pub(crate) fn hermitize(m: CMatrix) -> CMatrix {
    let adj = m.adjoint();
    (m + adj) * C64::new(0.5, 0.0)
}
