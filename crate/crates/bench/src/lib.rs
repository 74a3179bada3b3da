//! Shared inputs for the benchmarks.

use lfpp_core::field::{mollify, sample_field};
use lfpp_core::lfpp::build_weighted_grid;
use lfpp_core::{Field, GridSpec, WeightedGrid};

/// `n x n` nodes over `[-1.5, 1.5)^2`, room for the unit square and `|z| < 1`.
pub fn grid(n: usize) -> GridSpec {
    GridSpec::new(n, 1.5, 2).expect("benchmark grid")
}

pub fn raw_field(n: usize, seed: u64) -> Field {
    sample_field(&grid(n), seed).expect("sampling")
}

/// GFF mollified at four mesh spacings, weighted at `xi`.
pub fn weighted(n: usize, seed: u64, xi: f64) -> WeightedGrid {
    let spec = grid(n);
    let m = mollify(&raw_field(n, seed), 4.0 * spec.delta()).expect("mollify");
    build_weighted_grid(&m, xi).expect("weights")
}
