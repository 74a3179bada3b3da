//! Oracle fixtures: a small height field plus queries with known answers.
//!
//! Expected values come from an independent brute-force solver; the query verbs
//! replay them against the engine and report `oracle_equivalence`.

use std::path::Path;

use anyhow::{Context, Result};
use lfpp_core::field::Field;
use lfpp_core::lfpp::{across_annulus, around_annulus, build_weighted_grid, crossing_length, distance, Square};
use lfpp_core::{AnnulusSpec, GridSpec, Point, WeightedGrid};
use serde::{Deserialize, Serialize};

/// Relative tolerance for loop lengths, whose float sums may start at a
/// different vertex of the same cycle; every other query must match bitwise.
pub const AROUND_TOLERANCE: f64 = 4e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub n: usize,
    pub half_width: f64,
    #[serde(default = "default_pad")]
    pub pad_factor: usize,
    pub xi: f64,
    /// Nominal mollification scale recorded on the heights.
    pub eps: f64,
    /// Row-major node heights, `n * n` values.
    pub heights: Vec<f64>,
    pub cases: Vec<Case>,
}

fn default_pad() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "query", rename_all = "snake_case", deny_unknown_fields)]
pub enum Case {
    Distance {
        from: [f64; 2],
        to: [f64; 2],
        expected: f64,
    },
    Crossing {
        corner: [f64; 2],
        side: f64,
        expected: f64,
    },
    Across {
        center: [f64; 2],
        r1: f64,
        r2: f64,
        expected: f64,
    },
    Around {
        center: [f64; 2],
        r1: f64,
        r2: f64,
        expected: f64,
    },
}

fn pt(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

impl Case {
    pub fn verb(&self) -> &'static str {
        match self {
            Case::Distance { .. } => "distance",
            Case::Crossing { .. } => "crossing",
            Case::Across { .. } => "across",
            Case::Around { .. } => "around",
        }
    }

    pub fn expected(&self) -> f64 {
        match *self {
            Case::Distance { expected, .. }
            | Case::Crossing { expected, .. }
            | Case::Across { expected, .. }
            | Case::Around { expected, .. } => expected,
        }
    }

    pub fn evaluate(&self, grid: &WeightedGrid) -> lfpp_core::Result<f64> {
        let r = match *self {
            Case::Distance { from, to, .. } => distance(grid, pt(from), pt(to), None)?,
            Case::Crossing { corner, side, .. } => crossing_length(
                grid,
                Square {
                    x0: corner[0],
                    y0: corner[1],
                    side,
                },
            )?,
            Case::Across { center, r1, r2, .. } => across_annulus(grid, AnnulusSpec::new(pt(center), r1, r2))?,
            Case::Around { center, r1, r2, .. } => around_annulus(grid, AnnulusSpec::new(pt(center), r1, r2))?,
        };
        r.expect_finite(self.verb())
    }

    /// Whether `got` reproduces the expected value.
    pub fn matches(&self, got: f64) -> bool {
        let want = self.expected();
        match self {
            Case::Around { .. } => (got - want).abs() <= AROUND_TOLERANCE * want.abs(),
            _ => got.to_bits() == want.to_bits(),
        }
    }
}

impl Fixture {
    pub fn grid_spec(&self) -> lfpp_core::Result<GridSpec> {
        GridSpec::new(self.n, self.half_width, self.pad_factor)
    }

    /// The weighted lattice the cases refer to.
    pub fn weighted_grid(&self) -> lfpp_core::Result<WeightedGrid> {
        let field = Field::from_values(self.grid_spec()?, self.heights.clone())?.into_synthetic_mollified(self.eps, 0);
        build_weighted_grid(&field, self.xi)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading fixture {}", path.display()))?;
        let f: Fixture = serde_json::from_str(&text).with_context(|| format!("parsing fixture {}", path.display()))?;
        Ok(f)
    }
}
