//! Liouville first passage percolation on a lattice.
//!
//! * [`field`]: spectral Gaussian free field samples, heat-kernel mollification,
//!   circle averages.
//! * [`lfpp`]: the `exp(xi h_eps)`-weighted king-move metric and its queries.
//! * [`estimate`]: replica-based normalizers, exponent fits, KS statistics.
//! * [`experiments`]: scenario runners producing [`experiments::Report`]s.
//! * [`store`]: field cache files, report/CSV output, TOML config, seeds.

// `!(x > 0.0)` style guards are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod lfpp;
pub mod store;

pub use error::{Error, FormatError, Result};
pub use field::{Field, FieldKind, FieldSource};
pub use grid::{GridSpec, Node, Point};
pub use lfpp::{AnnulusSpec, DistanceResult, Length, RegionMask, WeightedGrid};
