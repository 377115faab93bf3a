//! Physical test states for the estimators.
//!
//! Open-chain spin Hamiltonians built from Pauli strings and applied
//! matrix-free up to 22 sites, a Krylov propagator for quenches, a
//! restarted Lanczos ground-state solver, and the Neel and W states.

mod hamiltonian;
mod krylov;
mod lanczos;
mod models;

pub use hamiltonian::{Pauli, PauliTerm, SpinHamiltonian, MAX_DENSE_HAMILTONIAN_SITES, MAX_MATRIX_FREE_SITES};
pub use krylov::{evolve, evolve_along, evolve_dense, evolve_with, Evolution, KrylovConfig};
pub use lanczos::{ground_state, ground_state_with, GroundState, LanczosConfig, DEGENERACY_GAP};
pub use models::{
    heisenberg, ising, ising_quench, neel_state, w_state, xx, xx_separable_threshold, ISING_CRITICAL_FIELD,
};
