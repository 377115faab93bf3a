//! Exact ground truth: pure states, reductions, partial transposes,
//! spectra, moments and the logarithmic negativity.
//!
//! Everything here is dense and exact up to eigensolver rounding. The other
//! modules use these routines as their reference oracle.

mod density;
mod state;

pub use density::{
    log_negativity, partial_transpose, pt_moments, pt_moments_by_powers, pt_spectrum, purity,
    DensityMatrix, MomentVector, PTSpectrum, MAX_MOMENT_ORDER, PPT_TOL,
};
pub use state::{random_gps, reduce, PureState, TriPartition, MAX_DENSE_AB_QUBITS, MAX_STATE_QUBITS};
pub(crate) use state::hermitize;
