use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qcore::PureState;

use super::hamiltonian::{Pauli, PauliTerm, SpinHamiltonian, MAX_MATRIX_FREE_SITES};
use super::lanczos::ground_state;

/// Default Ising critical field for `Σ σᶻσᶻ + B_X Σ σˣ`.
pub const ISING_CRITICAL_FIELD: f64 = 1.0;

fn check_chain(n: usize) -> Result<()> {
    if !(2..=MAX_MATRIX_FREE_SITES).contains(&n) {
        return Err(Error::size(format!("chain length must be in 2..={MAX_MATRIX_FREE_SITES}, got {n}")));
    }
    Ok(())
}

fn bond(coeff: f64, i: usize, p: Pauli) -> PauliTerm {
    PauliTerm::new(coeff, vec![(i, p), (i + 1, p)])
}

/// `J Σ σ_i · σ_{i+1}` on an open chain.
pub fn heisenberg(n: usize, j: f64) -> Result<SpinHamiltonian> {
    check_chain(n)?;
    let terms = (0..n - 1).flat_map(|i| [Pauli::X, Pauli::Y, Pauli::Z].map(|p| bond(j, i, p))).collect();
    SpinHamiltonian::new(n, terms)
}

/// `Σ (σˣσˣ + σʸσʸ) + B_Z Σ σᶻ` on an open chain.
pub fn xx(n: usize, bz: f64) -> Result<SpinHamiltonian> {
    check_chain(n)?;
    let mut terms: Vec<_> = (0..n - 1).flat_map(|i| [bond(1.0, i, Pauli::X), bond(1.0, i, Pauli::Y)]).collect();
    terms.extend((0..n).map(|i| PauliTerm::new(bz, vec![(i, Pauli::Z)])));
    SpinHamiltonian::new(n, terms)
}

/// Field above which the XX ground state is the polarized product state.
///
/// A single flipped spin costs `2B_Z` and hops with amplitude 2, so its
/// lowest open-chain mode sits at `2B_Z − 4cos(π/(L+1))`.
pub fn xx_separable_threshold(n: usize) -> f64 {
    2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos()
}

/// `Σ σᶻσᶻ + B_X Σ σˣ` on an open chain.
pub fn ising(n: usize, bx: f64) -> Result<SpinHamiltonian> {
    check_chain(n)?;
    let mut terms: Vec<_> = (0..n - 1).map(|i| bond(1.0, i, Pauli::Z)).collect();
    terms.extend((0..n).map(|i| PauliTerm::new(bx, vec![(i, Pauli::X)])));
    SpinHamiltonian::new(n, terms)
}

/// `|↑↓↑↓…⟩` with `|↑⟩ = |0⟩`.
pub fn neel_state(n: usize) -> Result<PureState> {
    let bits: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    PureState::basis(&bits)
}

/// Uniform superposition of the `n` single-excitation basis states.
pub fn w_state(n: usize) -> Result<PureState> {
    if !(2..=crate::qcore::MAX_STATE_QUBITS).contains(&n) {
        return Err(Error::size(format!("W state needs at least 2 qubits, got {n}")));
    }
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    for i in 0..n {
        amps[1 << i] = C64::new(1.0, 0.0);
    }
    PureState::new(amps)
}

/// Ground state of `ising(L, b_c + Δ)` paired with the quench Hamiltonian
/// `ising(L, b_c − Δ)`.
///
/// `Δ = 0` is accepted and yields a stationary state.
pub fn ising_quench(l: usize, critical_field: f64, delta: f64) -> Result<(PureState, SpinHamiltonian)> {
    if !(delta >= 0.0 && critical_field > delta && critical_field.is_finite()) {
        return Err(Error::input(format!("need b_c > Δ ≥ 0, got b_c = {critical_field}, Δ = {delta}")));
    }
    let initial = ground_state(&ising(l, critical_field + delta)?)?;
    Ok((initial.state, ising(l, critical_field - delta)?))
}
