//! The LFPP metric on the king-move lattice.
//!
//! A path through nodes `v_0, ..., v_k` has length
//! `sum_i step(v_i, v_{i+1}) * (w(v_i) + w(v_{i+1})) / 2` where `w = exp(xi h_eps)`
//! and `step` is `delta` for axis moves and `delta * sqrt 2` for diagonal ones.
//! All queries are exact shortest paths on this graph, optionally restricted
//! to a [`RegionMask`].

mod annulus;
mod search;

use std::collections::HashSet;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::field::{Field, FieldKind};
use crate::grid::{GridSpec, Node, Point};

pub use annulus::{across_annulus, around_annulus, AnnulusSpec};
use search::{dijkstra, SearchGraph};

/// Largest admissible `|xi * h|` before exponentiation.
pub const MAX_EXPONENT: f64 = 700.0;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGrid {
    spec: GridSpec,
    xi: f64,
    eps: f64,
    weights: Vec<f64>,
}

/// `vertex_weight[v] = exp(xi * h_eps(v))` for a mollified field.
pub fn build_weighted_grid(mfield: &Field, xi: f64) -> Result<WeightedGrid> {
    let eps = match mfield.kind() {
        FieldKind::Mollified { eps } => eps,
        FieldKind::Raw => return Err(Error::State("LFPP weights need a mollified field".into())),
    };
    if !(xi.is_finite() && xi > 0.0) {
        return Err(Error::Domain(format!("xi = {xi} must be positive and finite")));
    }
    let spec = *mfield.spec();
    let mut weights = Vec::with_capacity(spec.len());
    for (i, &h) in mfield.values().iter().enumerate() {
        let exponent = xi * h;
        if exponent.abs() > MAX_EXPONENT {
            let node = spec.node(i);
            return Err(Error::Overflow {
                ix: node.ix,
                iy: node.iy,
                exponent: exponent.abs(),
            });
        }
        weights.push(exponent.exp());
    }
    Ok(WeightedGrid { spec, xi, eps, weights })
}

impl WeightedGrid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, node: Node) -> f64 {
        self.weights[self.spec.index(node)]
    }

    /// Length of the edge between neighbouring nodes `u` and `v` (by index).
    #[inline]
    pub(crate) fn edge_len(&self, u: usize, v: usize, diagonal: bool) -> f64 {
        let step = if diagonal {
            self.spec.delta() * SQRT_2
        } else {
            self.spec.delta()
        };
        step * (self.weights[u] + self.weights[v]) * 0.5
    }

    /// Recomputed length of a node path, summed from its first node.
    pub fn path_length(&self, path: &[Node]) -> f64 {
        path.windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let diagonal = a.ix != b.ix && a.iy != b.iy;
                self.edge_len(self.spec.index(a), self.spec.index(b), diagonal)
            })
            .sum()
    }
}

/// Admissible vertices for an internal metric.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionMask {
    n: usize,
    inside: Vec<bool>,
}

impl RegionMask {
    pub fn full(spec: &GridSpec) -> Self {
        RegionMask {
            n: spec.n(),
            inside: vec![true; spec.len()],
        }
    }

    pub fn from_nodes(spec: &GridSpec, f: impl Fn(Node) -> bool) -> Self {
        RegionMask {
            n: spec.n(),
            inside: (0..spec.len()).map(|i| f(spec.node(i))).collect(),
        }
    }

    pub fn from_points(spec: &GridSpec, f: impl Fn(Point) -> bool) -> Self {
        Self::from_nodes(spec, |node| f(spec.point(node)))
    }

    pub fn contains(&self, node: Node) -> bool {
        node.ix < self.n && node.iy < self.n && self.inside[node.iy * self.n + node.ix]
    }

    #[inline]
    pub(crate) fn contains_index(&self, i: usize) -> bool {
        self.inside[i]
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.n == other.n && self.inside.iter().zip(&other.inside).all(|(&a, &b)| !a || b)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        let n = self.n;
        self.inside
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| Node::new(i % n, i / n))
    }

    fn check(&self, spec: &GridSpec) -> Result<()> {
        if self.n != spec.n() {
            return Err(Error::Geometry(format!(
                "mask is {0}x{0} but the grid is {1}x{1}",
                self.n,
                spec.n()
            )));
        }
        if !self.inside.contains(&true) {
            return Err(Error::Geometry("mask is empty".into()));
        }
        Ok(())
    }
}

/// Total shortest-path length, or the explicit unreachable marker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Length {
    Finite(f64),
    Unreachable,
}

impl Length {
    pub fn finite(self) -> Option<f64> {
        match self {
            Length::Finite(v) => Some(v),
            Length::Unreachable => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Length::Finite(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceResult {
    pub value: Length,
    /// Geodesic witness; for `around_annulus` a closed cycle (first node repeated last).
    pub path: Option<Vec<Node>>,
    /// Edge relaxations performed (telemetry).
    pub relaxations: u64,
}

impl DistanceResult {
    /// Finite value or a geometry error naming `what`.
    pub fn expect_finite(&self, what: &str) -> Result<f64> {
        self.value
            .finite()
            .ok_or_else(|| Error::Geometry(format!("{what}: endpoints are disconnected")))
    }

    fn unreachable(relaxations: u64) -> Self {
        DistanceResult {
            value: Length::Unreachable,
            path: None,
            relaxations,
        }
    }
}

/// Source/target sets for [`distance_sets`].
#[derive(Clone, Debug, PartialEq)]
pub enum NodeSet {
    Points(Vec<Point>),
    Nodes(Vec<Node>),
    /// Nodes within `delta / sqrt 2` of the circle.
    Circle {
        center: Point,
        radius: f64,
    },
    /// Nodes within `delta / 2` of the closed segment.
    Segment {
        a: Point,
        b: Point,
    },
}

const RASTER_SLACK: f64 = 1e-9;

impl NodeSet {
    pub fn rasterize(&self, spec: &GridSpec) -> Result<Vec<Node>> {
        let delta = spec.delta();
        let n = spec.n();
        let nodes = match self {
            NodeSet::Points(points) => points.iter().map(|&p| spec.node_of(p)).collect::<Result<Vec<_>>>()?,
            NodeSet::Nodes(nodes) => {
                if let Some(bad) = nodes.iter().find(|v| v.ix >= n || v.iy >= n) {
                    return Err(Error::Geometry(format!(
                        "node ({}, {}) is off the grid",
                        bad.ix, bad.iy
                    )));
                }
                nodes.clone()
            }
            NodeSet::Circle { center, radius } => {
                let tol = delta / SQRT_2 * (1.0 + RASTER_SLACK);
                let (lo, hi) = bounding_box(spec, *center, radius + tol);
                let mut out = Vec::new();
                for iy in lo.1..=hi.1 {
                    for ix in lo.0..=hi.0 {
                        let node = Node::new(ix, iy);
                        if (spec.point(node).dist(*center) - radius).abs() <= tol {
                            out.push(node);
                        }
                    }
                }
                out
            }
            NodeSet::Segment { a, b } => {
                let tol = 0.5 * delta * (1.0 + RASTER_SLACK);
                let mid = Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
                let (lo, hi) = bounding_box(spec, mid, 0.5 * a.dist(*b) + tol);
                let mut out = Vec::new();
                for iy in lo.1..=hi.1 {
                    for ix in lo.0..=hi.0 {
                        let node = Node::new(ix, iy);
                        if segment_dist(spec.point(node), *a, *b) <= tol {
                            out.push(node);
                        }
                    }
                }
                out
            }
        };
        if nodes.is_empty() {
            return Err(Error::Geometry(format!("{self:?} rasterizes to no grid nodes")));
        }
        Ok(nodes)
    }
}

fn bounding_box(spec: &GridSpec, c: Point, r: f64) -> ((usize, usize), (usize, usize)) {
    let delta = spec.delta();
    let (fx, fy) = spec.lattice_coords(c);
    let reach = r / delta + 1.0;
    let max = (spec.n() - 1) as f64;
    let clamp = |v: f64| v.clamp(0.0, max) as usize;
    (
        (clamp((fx - reach).floor()), clamp((fy - reach).floor())),
        (clamp((fx + reach).ceil()), clamp((fy + reach).ceil())),
    )
}

fn segment_dist(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    p.dist(Point::new(a.x + t * dx, a.y + t * dy))
}

/// The 8-neighbour graph restricted to a mask.
pub(crate) struct KingGraph<'a> {
    grid: &'a WeightedGrid,
    mask: Option<&'a RegionMask>,
}

const MOVES: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

impl<'a> KingGraph<'a> {
    pub(crate) fn new(grid: &'a WeightedGrid, mask: Option<&'a RegionMask>) -> Self {
        KingGraph { grid, mask }
    }

    fn admits(&self, i: usize) -> bool {
        self.mask.is_none_or(|m| m.contains_index(i))
    }
}

impl SearchGraph for KingGraph<'_> {
    fn node_count(&self) -> usize {
        self.grid.spec.len()
    }

    #[inline]
    fn for_each_neighbor(&self, u: usize, mut f: impl FnMut(usize, f64)) {
        let n = self.grid.spec.n() as isize;
        let (ux, uy) = ((u as isize) % n, (u as isize) / n);
        for (dx, dy) in MOVES {
            let (vx, vy) = (ux + dx, uy + dy);
            if vx < 0 || vy < 0 || vx >= n || vy >= n {
                continue;
            }
            let v = (vy * n + vx) as usize;
            if !self.admits(v) {
                continue;
            }
            f(v, self.grid.edge_len(u, v, dx != 0 && dy != 0));
        }
    }
}

fn check_mask(grid: &WeightedGrid, mask: Option<&RegionMask>) -> Result<()> {
    match mask {
        Some(m) => m.check(&grid.spec),
        None => Ok(()),
    }
}

/// Shortest-path distance between the nodes nearest to `a` and `b`.
///
/// The search always runs from the lower-indexed endpoint, so
/// `distance(a, b)` and `distance(b, a)` agree bit for bit.
pub fn distance(grid: &WeightedGrid, a: Point, b: Point, mask: Option<&RegionMask>) -> Result<DistanceResult> {
    let spec = grid.spec;
    check_mask(grid, mask)?;
    let (na, nb) = (spec.node_of(a)?, spec.node_of(b)?);
    for (p, node) in [(a, na), (b, nb)] {
        if mask.is_some_and(|m| !m.contains(node)) {
            return Err(Error::Geometry(format!("point ({}, {}) is outside the mask", p.x, p.y)));
        }
    }
    let (ia, ib) = (spec.index(na), spec.index(nb));
    let (src, dst) = (ia.min(ib), ia.max(ib));
    let graph = KingGraph::new(grid, mask);
    let search = dijkstra(&graph, &[src], |v| v == dst, f64::INFINITY);
    let Some((_, value)) = search.reached else {
        return Ok(DistanceResult::unreachable(search.relaxations));
    };
    let mut path: Vec<Node> = search.path_to(dst).into_iter().map(|i| spec.node(i)).collect();
    if ia > ib {
        path.reverse();
    }
    Ok(DistanceResult {
        value: Length::Finite(value),
        path: Some(path),
        relaxations: search.relaxations,
    })
}

/// `min_{a in A, b in B} D(a, b)` in a single multi-source sweep.
pub fn distance_sets(
    grid: &WeightedGrid,
    from: &NodeSet,
    to: &NodeSet,
    mask: Option<&RegionMask>,
) -> Result<DistanceResult> {
    let spec = grid.spec;
    check_mask(grid, mask)?;
    let keep = |nodes: Vec<Node>, which: &str| -> Result<Vec<usize>> {
        let kept: Vec<usize> = nodes
            .into_iter()
            .filter(|&v| mask.is_none_or(|m| m.contains(v)))
            .map(|v| spec.index(v))
            .collect();
        if kept.is_empty() {
            return Err(Error::Geometry(format!("{which} set has no nodes inside the mask")));
        }
        Ok(kept)
    };
    let sources = keep(from.rasterize(&spec)?, "source")?;
    let targets = keep(to.rasterize(&spec)?, "target")?;
    let mut is_target = vec![false; spec.len()];
    for &t in &targets {
        is_target[t] = true;
    }
    let graph = KingGraph::new(grid, mask);
    let search = dijkstra(&graph, &sources, |v| is_target[v], f64::INFINITY);
    let Some((hit, value)) = search.reached else {
        return Ok(DistanceResult::unreachable(search.relaxations));
    };
    let path = search.path_to(hit).into_iter().map(|i| spec.node(i)).collect();
    Ok(DistanceResult {
        value: Length::Finite(value),
        path: Some(path),
        relaxations: search.relaxations,
    })
}

/// Axis-aligned square `[x0, x0 + side] x [y0, y0 + side]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Square {
    pub x0: f64,
    pub y0: f64,
    pub side: f64,
}

impl Square {
    pub const UNIT: Square = Square {
        x0: 0.0,
        y0: 0.0,
        side: 1.0,
    };

    pub fn mask(&self, spec: &GridSpec) -> RegionMask {
        let tol = 0.5 * spec.delta() * (1.0 + RASTER_SLACK);
        let (x1, y1) = (self.x0 + self.side, self.y0 + self.side);
        RegionMask::from_points(spec, |p| {
            p.x >= self.x0 - tol && p.x <= x1 + tol && p.y >= self.y0 - tol && p.y <= y1 + tol
        })
    }
}

/// Left-right crossing distance of a square, internal to the square.
pub fn crossing_length(grid: &WeightedGrid, square: Square) -> Result<DistanceResult> {
    let spec = grid.spec;
    let delta = spec.delta();
    if !(square.side >= 4.0 * delta) {
        return Err(Error::Geometry(format!(
            "square side {} is below 4 delta = {}",
            square.side,
            4.0 * delta
        )));
    }
    let corners = [
        Point::new(square.x0, square.y0),
        Point::new(square.x0 + square.side, square.y0 + square.side),
    ];
    if corners.iter().any(|&c| spec.clearance(c) < -0.5 * delta) {
        return Err(Error::Geometry(format!("{square:?} is not inside the grid")));
    }
    let (x1, y1) = (square.x0 + square.side, square.y0 + square.side);
    let left = NodeSet::Segment {
        a: Point::new(square.x0, square.y0),
        b: Point::new(square.x0, y1),
    };
    let right = NodeSet::Segment {
        a: Point::new(x1, square.y0),
        b: Point::new(x1, y1),
    };
    let mask = square.mask(&spec);
    distance_sets(grid, &left, &right, Some(&mask))
}

/// Whether two node polylines meet: a shared node, or two diagonals crossing
/// inside the same lattice cell.
pub fn paths_intersect(a: &[Node], b: &[Node]) -> bool {
    let nodes: HashSet<Node> = b.iter().copied().collect();
    if a.iter().any(|v| nodes.contains(v)) {
        return true;
    }
    let diagonals = |path: &[Node]| -> HashSet<(usize, usize, bool)> {
        path.windows(2)
            .filter(|w| w[0].ix != w[1].ix && w[0].iy != w[1].iy)
            .map(|w| {
                let (p, q) = (w[0], w[1]);
                let rising = (q.ix > p.ix) == (q.iy > p.iy);
                (p.ix.min(q.ix), p.iy.min(q.iy), rising)
            })
            .collect()
    };
    let db = diagonals(b);
    diagonals(a)
        .into_iter()
        .any(|(cx, cy, rising)| db.contains(&(cx, cy, !rising)))
}
