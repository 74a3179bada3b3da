//! Square lattice carrying fields and metrics.
//!
//! An `n x n` grid covers `[-L, L)^2` with spacing `delta = 2L / n`. Node
//! `(ix, iy)` sits at `(-L + ix * delta, -L + iy * delta)`, so the origin is
//! node `(n/2, n/2)`. Values are stored row-major: `iy * n + ix`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Node {
    pub ix: usize,
    pub iy: usize,
}

impl Node {
    pub const fn new(ix: usize, iy: usize) -> Self {
        Node { ix, iy }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridSpec", into = "RawGridSpec")]
pub struct GridSpec {
    n: usize,
    half_width: f64,
    pad_factor: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGridSpec {
    n: usize,
    half_width: f64,
    pad_factor: usize,
}

impl TryFrom<RawGridSpec> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGridSpec) -> Result<Self> {
        GridSpec::new(raw.n, raw.half_width, raw.pad_factor)
    }
}

impl From<GridSpec> for RawGridSpec {
    fn from(spec: GridSpec) -> Self {
        RawGridSpec {
            n: spec.n,
            half_width: spec.half_width,
            pad_factor: spec.pad_factor,
        }
    }
}

impl GridSpec {
    pub const DEFAULT_PAD: usize = 4;

    pub fn new(n: usize, half_width: f64, pad_factor: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Geometry(format!(
                "grid size n = {n} must be a power of two >= 2"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Geometry(format!(
                "half width L = {half_width} must be positive and finite"
            )));
        }
        if pad_factor < 2 {
            return Err(Error::Geometry(format!("pad factor {pad_factor} must be at least 2")));
        }
        Ok(GridSpec {
            n,
            half_width,
            pad_factor,
        })
    }

    /// Grid with spacing `delta` chosen so that `n * delta = 2L`.
    pub fn with_spacing(n: usize, delta: f64) -> Result<Self> {
        Self::new(n, 0.5 * n as f64 * delta, Self::DEFAULT_PAD)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn pad_factor(&self) -> usize {
        self.pad_factor
    }

    pub fn delta(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, node: Node) -> usize {
        node.iy * self.n + node.ix
    }

    pub fn node(&self, index: usize) -> Node {
        Node::new(index % self.n, index / self.n)
    }

    pub fn point(&self, node: Node) -> Point {
        let d = self.delta();
        Point::new(
            -self.half_width + node.ix as f64 * d,
            -self.half_width + node.iy as f64 * d,
        )
    }

    pub fn point_of_index(&self, index: usize) -> Point {
        self.point(self.node(index))
    }

    /// Continuous index coordinates of `p` (not rounded).
    pub fn lattice_coords(&self, p: Point) -> (f64, f64) {
        let d = self.delta();
        ((p.x + self.half_width) / d, (p.y + self.half_width) / d)
    }

    /// Nearest node to `p`, or a geometry error if it falls off the grid.
    pub fn node_of(&self, p: Point) -> Result<Node> {
        let (fx, fy) = self.lattice_coords(p);
        let (ix, iy) = (fx.round(), fy.round());
        let max = (self.n - 1) as f64;
        if !(ix >= 0.0 && iy >= 0.0 && ix <= max && iy <= max) {
            return Err(Error::Geometry(format!(
                "point ({}, {}) lies outside the grid [-{L}, {L})^2",
                p.x,
                p.y,
                L = self.half_width
            )));
        }
        Ok(Node::new(ix as usize, iy as usize))
    }

    pub fn origin(&self) -> Node {
        Node::new(self.n / 2, self.n / 2)
    }

    /// Smallest distance from `p` to the edge of the node hull `[-L, L - delta]^2`.
    pub fn clearance(&self, p: Point) -> f64 {
        let lo = -self.half_width;
        let hi = self.half_width - self.delta();
        (p.x - lo).min(hi - p.x).min(p.y - lo).min(hi - p.y)
    }

    /// Errors unless the disc of radius `r` about `center` keeps `margin` from the grid edge.
    pub fn require_disc(&self, center: Point, r: f64, margin: f64, what: &str) -> Result<()> {
        if self.clearance(center) < r + margin {
            return Err(Error::Geometry(format!(
                "{what}: disc of radius {r} about ({}, {}) needs margin {margin} inside grid of half width {}",
                center.x, center.y, self.half_width
            )));
        }
        Ok(())
    }
}
