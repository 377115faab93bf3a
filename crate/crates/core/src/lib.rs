//! Logarithmic negativity of bipartite mixed states from a handful of
//! partial-transpose moments.
//!
//! The crate bundles the exact dense oracle ([`qcore`]), random
//! matrix-product states ([`mps`]), the multi-copy measurement protocol
//! ([`protocol`]), the Chebyshev estimator ([`chebyshev`]), the neural
//! regressor ([`mlnet`]) and the spin-chain test systems ([`physmodels`]).

// Force the system OpenBLAS to be linked for the LAPACK/BLAS symbols.
extern crate openblas_src;

pub mod chebyshev;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod mlnet;
pub mod mps;
pub mod physmodels;
pub mod protocol;
pub mod qcore;
pub mod rng;

pub use error::{Error, Result};
pub use rng::Seed;
