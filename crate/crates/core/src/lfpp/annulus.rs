//! Across- and around-annulus distances.

use std::f64::consts::SQRT_2;

use super::search::{dijkstra, SearchGraph};
use super::{distance_sets, DistanceResult, KingGraph, Length, NodeSet, RegionMask, WeightedGrid};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Node, Point};

const SLACK: f64 = 1e-9;

/// The open annulus `{ r1 < |x - center| < r2 }`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusSpec {
    pub center: Point,
    pub r1: f64,
    pub r2: f64,
}

impl AnnulusSpec {
    pub fn new(center: Point, r1: f64, r2: f64) -> Self {
        AnnulusSpec { center, r1, r2 }
    }

    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        let delta = spec.delta();
        if !(self.center.x.is_finite() && self.center.y.is_finite()) {
            return Err(Error::Geometry("annulus centre is not finite".into()));
        }
        if !(self.r1 > 0.0 && self.r1 < self.r2 && self.r2.is_finite()) {
            return Err(Error::Geometry(format!(
                "annulus radii must satisfy 0 < r1 < r2 (got {}, {})",
                self.r1, self.r2
            )));
        }
        if self.r2 - self.r1 < 4.0 * delta {
            return Err(Error::Geometry(format!(
                "annulus width {} is below 4 delta = {}",
                self.r2 - self.r1,
                4.0 * delta
            )));
        }
        spec.require_disc(self.center, self.r2, 2.0 * delta, "annulus")
    }

    /// Closed band `r1 - delta/sqrt2 <= |x - c| <= r2 + delta/sqrt2`, which
    /// contains both rasterized boundary circles.
    pub fn closed_mask(&self, spec: &GridSpec) -> RegionMask {
        let tol = spec.delta() / SQRT_2 * (1.0 + SLACK);
        RegionMask::from_points(spec, |p| {
            let rho = p.dist(self.center);
            rho >= self.r1 - tol && rho <= self.r2 + tol
        })
    }

    /// Interior band `r1 + delta/sqrt2 < |x - c| < r2 - delta/sqrt2`, strictly
    /// between the rasterized boundary circles.
    pub fn open_mask(&self, spec: &GridSpec) -> RegionMask {
        let tol = spec.delta() / SQRT_2 * (1.0 + SLACK);
        RegionMask::from_points(spec, |p| {
            let rho = p.dist(self.center);
            rho > self.r1 + tol && rho < self.r2 - tol
        })
    }

    pub fn inner(&self) -> NodeSet {
        NodeSet::Circle {
            center: self.center,
            radius: self.r1,
        }
    }

    pub fn outer(&self) -> NodeSet {
        NodeSet::Circle {
            center: self.center,
            radius: self.r2,
        }
    }
}

/// Distance between the rasterized inner and outer boundary circles, internal
/// to the closed band.
pub fn across_annulus(grid: &WeightedGrid, ann: AnnulusSpec) -> Result<DistanceResult> {
    ann.validate(grid.spec())?;
    let mask = ann.closed_mask(grid.spec());
    distance_sets(grid, &ann.inner(), &ann.outer(), Some(&mask))
}

/// Which lattice edges cross the horizontal ray running right from the centre.
///
/// Nodes exactly on the ray's row count as below it, i.e. the ray sits an
/// infinitesimal distance above its nominal height.
struct Ray {
    n: usize,
    fx: f64,
    fy: f64,
}

impl Ray {
    #[inline]
    fn above(&self, iy: usize) -> bool {
        iy as f64 > self.fy
    }

    #[inline]
    fn crosses(&self, u: usize, v: usize) -> bool {
        let (uy, vy) = (u / self.n, v / self.n);
        let (ua, va) = (self.above(uy), self.above(vy));
        if ua == va {
            return false;
        }
        let (b, a) = if ua { (v, u) } else { (u, v) };
        let (bx, by) = ((b % self.n) as f64, (b / self.n) as f64);
        let (ax, ay) = ((a % self.n) as f64, (a / self.n) as f64);
        let x = bx + (self.fy - by) / (ay - by) * (ax - bx);
        if x == self.fx {
            ax > bx
        } else {
            x > self.fx
        }
    }
}

/// Two copies of the masked king graph; crossing the ray switches copy.
/// State `2 v + p` is node `v` on sheet `p`.
struct Cover<'a> {
    base: KingGraph<'a>,
    ray: &'a Ray,
}

impl SearchGraph for Cover<'_> {
    fn node_count(&self) -> usize {
        2 * self.base.node_count()
    }

    #[inline]
    fn for_each_neighbor(&self, state: usize, mut f: impl FnMut(usize, f64)) {
        let (u, sheet) = (state >> 1, state & 1);
        self.base.for_each_neighbor(u, |v, len| {
            let flip = self.ray.crosses(u, v) as usize;
            f(2 * v + (sheet ^ flip), len);
        });
    }
}

/// Shortest cycle inside the open annulus that winds an odd number of times
/// around the centre, i.e. separates the inner boundary from the outer one.
///
/// Each candidate cycle crosses the ray; for every slit vertex `s` (the lower
/// endpoint of a crossing edge) the shortest odd cycle through `s` is a
/// shortest path between the two copies of `s` in the double cover. Searches
/// are pruned by the best cycle found so far.
pub fn around_annulus(grid: &WeightedGrid, ann: AnnulusSpec) -> Result<DistanceResult> {
    let spec = *grid.spec();
    ann.validate(&spec)?;
    let mask = ann.open_mask(&spec);
    let too_thin = || {
        Error::Geometry(format!(
            "annulus ({}, {}) is too thin to hold a separating cycle at delta = {}",
            ann.r1,
            ann.r2,
            spec.delta()
        ))
    };
    if mask.count() == 0 {
        return Err(too_thin());
    }
    let (fx, fy) = spec.lattice_coords(ann.center);
    let ray = Ray { n: spec.n(), fx, fy };
    let cover = Cover {
        base: KingGraph::new(grid, Some(&mask)),
        ray: &ray,
    };

    let mut slit: Vec<usize> = Vec::new();
    for node in mask.nodes() {
        let u = spec.index(node);
        if ray.above(node.iy) {
            continue;
        }
        let mut crossing = false;
        cover.base.for_each_neighbor(u, |v, _| crossing |= ray.crosses(u, v));
        if crossing {
            slit.push(u);
        }
    }

    let mut best = f64::INFINITY;
    let mut witness: Option<Vec<Node>> = None;
    let mut relaxations = 0;
    for &s in &slit {
        let (from, to) = (2 * s, 2 * s + 1);
        let search = dijkstra(&cover, &[from], |st| st == to, best);
        relaxations += search.relaxations;
        if let Some((_, d)) = search.reached {
            if d < best {
                best = d;
                witness = Some(search.path_to(to).into_iter().map(|st| spec.node(st >> 1)).collect());
            }
        }
    }
    match witness {
        Some(path) => Ok(DistanceResult {
            value: Length::Finite(best),
            path: Some(path),
            relaxations,
        }),
        None => Err(too_thin()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::lfpp::{build_weighted_grid, paths_intersect};
    use std::f64::consts::TAU;

    fn flat(spec: GridSpec, c: f64, xi: f64) -> WeightedGrid {
        let f = Field::constant(spec, c).into_synthetic_mollified(2.0 * spec.delta(), 0);
        build_weighted_grid(&f, xi).unwrap()
    }

    #[test]
    fn validation() {
        let spec = GridSpec::new(64, 1.0, 2).unwrap();
        let ok = AnnulusSpec::new(Point::ORIGIN, 0.25, 0.5);
        assert!(ok.validate(&spec).is_ok());
        for bad in [
            AnnulusSpec::new(Point::ORIGIN, 0.5, 0.25),
            AnnulusSpec::new(Point::ORIGIN, 0.25, 0.25 + 2.0 * spec.delta()),
            AnnulusSpec::new(Point::ORIGIN, 0.25, 0.95),
            AnnulusSpec::new(Point::new(0.6, 0.0), 0.1, 0.5),
        ] {
            assert!(matches!(bad.validate(&spec), Err(Error::Geometry(_))), "{bad:?}");
        }
    }

    #[test]
    fn zero_field_across_is_near_euclidean() {
        let spec = GridSpec::with_spacing(256, 1.0 / 128.0).unwrap();
        let delta = spec.delta();
        let g = flat(spec, 0.0, 1.0);
        let v = across_annulus(&g, AnnulusSpec::new(Point::ORIGIN, 0.25, 0.5))
            .unwrap()
            .value
            .finite()
            .unwrap();
        assert!(v <= 0.25 * 1.083 + 4.0 * delta, "{v}");
        assert!(v >= 0.25 - SQRT_2 * delta, "{v}");
    }

    #[test]
    fn zero_field_around_brackets_the_perimeter() {
        let spec = GridSpec::with_spacing(256, 1.0 / 128.0).unwrap();
        let delta = spec.delta();
        let g = flat(spec, 0.0, 1.0);
        let r = around_annulus(&g, AnnulusSpec::new(Point::ORIGIN, 0.25, 0.5)).unwrap();
        let v = r.value.finite().unwrap();
        assert!(v >= TAU * 0.25 * (1.0 - 3.0 * delta / 0.25), "{v}");
        assert!(v <= TAU * 0.25 * 1.083 + 8.0 * delta, "{v}");
        let cycle = r.path.unwrap();
        assert_eq!(cycle.first(), cycle.last());
        assert!((g.path_length(&cycle) - v).abs() <= 1e-9 * v);
    }

    #[test]
    fn constant_field_scales_both() {
        let spec = GridSpec::new(64, 1.0, 2).unwrap();
        let ann = AnnulusSpec::new(Point::new(0.05, -0.1), 0.2, 0.6);
        let (xi, c) = (1.3, -0.45);
        let (g0, gc) = (flat(spec, 0.0, xi), flat(spec, c, xi));
        let factor = (xi * c).exp();
        for q in [across_annulus, around_annulus] {
            let a = q(&g0, ann).unwrap().value.finite().unwrap();
            let b = q(&gc, ann).unwrap().value.finite().unwrap();
            assert!((b / a / factor - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn across_geodesic_meets_around_cycle() {
        let spec = GridSpec::new(64, 1.0, 2).unwrap();
        let f = Field::from_fn(spec, |p| (3.0 * p.x).sin() + (5.0 * p.y * p.x).cos())
            .unwrap()
            .into_synthetic_mollified(0.1, 0);
        let g = build_weighted_grid(&f, 1.0).unwrap();
        let ann = AnnulusSpec::new(Point::ORIGIN, 0.2, 0.6);
        let across = across_annulus(&g, ann).unwrap().path.unwrap();
        let around = around_annulus(&g, ann).unwrap().path.unwrap();
        assert!(paths_intersect(&across, &around));
    }
}
