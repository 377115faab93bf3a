use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::qcore::PureState;

/// Largest chain handled by matrix-free application.
pub const MAX_MATRIX_FREE_SITES: usize = 22;
/// Largest chain for which a dense Hamiltonian is built.
pub const MAX_DENSE_HAMILTONIAN_SITES: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        })
    }
}

/// `coeff · Π σ^{p}_{site}` with distinct sites.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    pub ops: Vec<(usize, Pauli)>,
}

impl PauliTerm {
    pub fn new(coeff: f64, ops: Vec<(usize, Pauli)>) -> Self {
        PauliTerm { coeff, ops }
    }
}

/// Bit masks of one string; `P|x⟩ = i^{n_y} (-1)^{|x ∧ sign|} |x ⊕ flip⟩`.
#[derive(Clone, Copy, Debug)]
struct CompiledString {
    amplitude: C64,
    sign: usize,
}

/// Real-coupling sum of Pauli strings on an open chain of `n` qubits.
///
/// Site `i` is bit `n - 1 - i` of the basis index. Terms sharing a flip
/// pattern are grouped, so one application costs one pass over the
/// amplitudes per distinct pattern.
#[derive(Clone, Debug)]
pub struct SpinHamiltonian {
    n_sites: usize,
    terms: Vec<PauliTerm>,
    groups: Vec<(usize, Vec<CompiledString>)>,
}

impl SpinHamiltonian {
    pub fn new(n_sites: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if !(1..=MAX_MATRIX_FREE_SITES).contains(&n_sites) {
            return Err(Error::size(format!("Hamiltonian needs 1..={MAX_MATRIX_FREE_SITES} sites, got {n_sites}")));
        }
        let mut grouped: BTreeMap<usize, Vec<CompiledString>> = BTreeMap::new();
        for term in &terms {
            if !term.coeff.is_finite() {
                return Err(Error::input("non-finite coupling"));
            }
            let (mut flip, mut sign, mut n_y) = (0usize, 0usize, 0u32);
            for &(site, p) in &term.ops {
                if site >= n_sites {
                    return Err(Error::input(format!("site {site} outside a chain of {n_sites}")));
                }
                let bit = 1usize << (n_sites - 1 - site);
                if (flip | sign) & bit != 0 {
                    return Err(Error::input(format!("site {site} repeated in one Pauli string")));
                }
                match p {
                    Pauli::X => flip |= bit,
                    Pauli::Y => {
                        flip |= bit;
                        sign |= bit;
                        n_y += 1;
                    }
                    Pauli::Z => sign |= bit,
                }
            }
            let phase = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
            let amplitude = phase[(n_y % 4) as usize] * term.coeff;
            grouped.entry(flip).or_default().push(CompiledString { amplitude, sign });
        }
        Ok(SpinHamiltonian { n_sites, terms, groups: grouped.into_iter().collect() })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// `out = H v`.
    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        assert_eq!(v.len(), self.dim(), "vector length does not match the Hamiltonian");
        assert_eq!(out.len(), self.dim(), "output length does not match the Hamiltonian");
        const CHUNK: usize = 1 << 12;
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (k, o) in chunk.iter_mut().enumerate() {
                let y = base + k;
                let mut acc = C64::new(0.0, 0.0);
                for (flip, strings) in &self.groups {
                    let x = y ^ flip;
                    let mut coeff = C64::new(0.0, 0.0);
                    for s in strings {
                        if (x & s.sign).count_ones() & 1 == 0 {
                            coeff += s.amplitude;
                        } else {
                            coeff -= s.amplitude;
                        }
                    }
                    acc += coeff * v[x];
                }
                *o = acc;
            }
        });
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        self.apply_into(v, &mut out);
        out
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        self.check_state(psi)?;
        let hv = self.apply(psi.amplitudes());
        Ok(psi.amplitudes().iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum())
    }

    /// Dense `2^N × 2^N` matrix, for oracles on small chains.
    pub fn to_dense(&self) -> Result<CMatrix> {
        if self.n_sites > MAX_DENSE_HAMILTONIAN_SITES {
            return Err(Error::size(format!(
                "dense Hamiltonian limited to {MAX_DENSE_HAMILTONIAN_SITES} sites, got {}",
                self.n_sites
            )));
        }
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        let mut e = vec![C64::new(0.0, 0.0); d];
        for col in 0..d {
            e[col] = C64::new(1.0, 0.0);
            let hv = self.apply(&e);
            m.column_mut(col).iter_mut().zip(&hv).for_each(|(a, b)| *a = *b);
            e[col] = C64::new(0.0, 0.0);
        }
        Ok(m)
    }

    pub(crate) fn check_state(&self, psi: &PureState) -> Result<()> {
        if psi.n_qubits() != self.n_sites {
            return Err(Error::Shape { expected: self.n_sites, got: psi.n_qubits() });
        }
        Ok(())
    }
}
