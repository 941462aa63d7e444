//! Multi-objective Bayesian optimization with information-theoretic
//! acquisition functions over feasible Pareto frontiers.
//!
//! The crate provides the full loop: independent Matern-5/2 GP surrogates,
//! NSGA-II frontier sampling from spectral trajectories, hypervolume box
//! decomposition of the non-dominated region, the pf2es / q-pf2es / mopi
//! acquisitions with analytic gradients, a multi-start bounded quasi-Newton
//! acquisition optimizer, benchmark problems with reference data, and run
//! orchestration with JSON records.

pub mod error;
pub mod problem;
pub mod moo;
pub mod gp;
pub mod optim;
pub mod partition;
pub mod acquisition;
pub mod benchmarks;
pub mod bo;

pub use error::{Error, Result};

/// Derive a stream-specific seed from a base seed (splitmix64 step).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
