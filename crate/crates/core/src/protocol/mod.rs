//! Multi-copy measurement of the partial-transpose moments.
//!
//! `μ_m` is the expectation of a permutation operator on `m` copies of
//! `ρ_AB`. This module builds that operator for qubit registers from
//! pairwise copy swaps, checks the identity by brute force, runs the
//! Fourier-phase variant for bosonic modes, and models the finite-shot
//! statistics of the outcomes.

mod bosonic;
mod permutation;
mod shots;

pub use bosonic::{bosonic_protocol_check, BosonicCheck, BosonicState, MAX_BOSON_COPIES, MAX_BOSON_CUTOFF};
pub use permutation::{
    build_permutation, build_pt_permutation, build_swap, partial_transpose_copies, verify_moment_identity,
    verify_with_operator, CopyPermutation, PermTerm, PermutationOperator, Subsystem, MAX_COPY_QUBITS,
};
pub use shots::{
    measure_moments_noisy, noisy_from_exact, sample_moment, sample_st_chain, shot_noise_std, st_chain_mean,
    NoisyMoments, ShotNoiseConfig,
};
