//! Fixture builders shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use lfpp_core::field::Field;
use lfpp_core::lfpp::{across_annulus, around_annulus, build_weighted_grid, crossing_length, distance, Square};
use lfpp_core::{AnnulusSpec, GridSpec, Node, Point, RegionMask, WeightedGrid};
use lfpp_oracle::Lattice;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Weighted grid from i.i.d. uniform heights in `[-1, 1]` (or all zero).
pub fn random_grid(spec: GridSpec, xi: f64, seed: u64, zero: bool) -> WeightedGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..spec.len())
        .map(|_| if zero { 0.0 } else { rng.random_range(-1.0..1.0) })
        .collect();
    let f = Field::from_values(spec, values)
        .unwrap()
        .into_synthetic_mollified(2.0 * spec.delta(), seed);
    build_weighted_grid(&f, xi).unwrap()
}

pub fn lattice(grid: &WeightedGrid, mask: &RegionMask) -> Lattice {
    let spec = grid.spec();
    let m = (0..spec.len()).map(|i| mask.contains(spec.node(i))).collect();
    Lattice::new(spec.n(), spec.delta(), grid.weights().to_vec(), m)
}

pub fn indices(spec: &GridSpec, nodes: &[Node]) -> Vec<usize> {
    nodes.iter().map(|&v| spec.index(v)).collect()
}

/// Winding number of a closed node polyline about `c`, by summed angles.
pub fn winding(spec: &GridSpec, cycle: &[Node], c: Point) -> i64 {
    let angle = |v: Node| {
        let p = spec.point(v);
        (p.y - c.y).atan2(p.x - c.x)
    };
    let mut total = 0.0;
    for w in cycle.windows(2) {
        let mut d = angle(w[1]) - angle(w[0]);
        if d > std::f64::consts::PI {
            d -= std::f64::consts::TAU;
        } else if d < -std::f64::consts::PI {
            d += std::f64::consts::TAU;
        }
        total += d;
    }
    (total / std::f64::consts::TAU).round() as i64
}

/// One oracle comparison: the query, its size, and whether it matched.
pub struct Check {
    pub label: String,
    pub vertices: usize,
    pub ok: bool,
    pub detail: String,
}

fn compare(label: String, vertices: usize, got: Option<f64>, want: Option<f64>, rel: f64) -> Check {
    let ok = match (got, want) {
        (Some(a), Some(b)) if rel == 0.0 => a.to_bits() == b.to_bits(),
        (Some(a), Some(b)) => (a - b).abs() <= rel * b.abs(),
        (None, None) => true,
        _ => false,
    };
    Check {
        label,
        vertices,
        ok,
        detail: format!("engine {got:?}, oracle {want:?}"),
    }
}

/// Relative tolerance for around-annulus cycles: the engine sums each cycle
/// from a slit vertex, the oracle from the cycle's lowest-indexed vertex, and
/// the oracle resolves ties only to `CYCLE_TIE`.
pub const CYCLE_REL: f64 = 4.0 * lfpp_oracle::CYCLE_TIE;

/// Point-to-point distances on random blocks of up to 9 x 9 nodes.
pub fn distance_checks(seed: u64, count: usize) -> Vec<Check> {
    let spec = GridSpec::new(16, 1.0, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in 0..count {
        let zero = k % 5 == 0;
        let grid = random_grid(spec, 1.5, rng.random(), zero);
        // a w x h block, w, h in 4..=9, with up to 3 holes
        let (w, h) = (rng.random_range(4..=9usize), rng.random_range(4..=9usize));
        let (x0, y0) = (rng.random_range(0..=16 - w), rng.random_range(0..=16 - h));
        let holes: Vec<Node> = (0..rng.random_range(0..=3))
            .map(|_| Node::new(x0 + rng.random_range(0..w), y0 + rng.random_range(0..h)))
            .collect();
        let mask = RegionMask::from_nodes(&spec, |v| {
            v.ix >= x0 && v.ix < x0 + w && v.iy >= y0 && v.iy < y0 + h && !holes.contains(&v)
        });
        let inside: Vec<Node> = mask.nodes().collect();
        if inside.len() < 2 {
            continue;
        }
        let a = inside[rng.random_range(0..inside.len())];
        let b = inside[rng.random_range(0..inside.len())];
        let got = distance(&grid, spec.point(a), spec.point(b), Some(&mask))
            .unwrap()
            .value
            .finite();
        let (ia, ib) = (spec.index(a), spec.index(b));
        let want = lattice(&grid, &mask)
            .shortest_path(&[ia.min(ib)], &[ia.max(ib)])
            .map(|b| b.length);
        out.push(compare(
            format!("distance #{k} {w}x{h} {a:?}->{b:?}"),
            mask.count(),
            got,
            want,
            0.0,
        ));
    }
    out
}

/// Left-right crossings of squares resolving to 6 x 6 (and 5 x 5, 7 x 7) nodes.
pub fn crossing_checks(seed: u64, count: usize) -> Vec<Check> {
    let spec = GridSpec::new(16, 1.6, 2).unwrap();
    let delta = spec.delta();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in 0..count {
        let grid = random_grid(spec, 1.5, rng.random(), k % 5 == 0);
        let cells = rng.random_range(4..=6) as f64;
        let x0 = -1.0 + rng.random_range(0..6) as f64 * delta + rng.random_range(-0.3..0.3) * delta;
        let y0 = -1.0 + rng.random_range(0..6) as f64 * delta + rng.random_range(-0.3..0.3) * delta;
        let square = Square {
            x0,
            y0,
            side: cells * delta,
        };
        let mask = square.mask(&spec);
        let left: Vec<Node> = mask
            .nodes()
            .filter(|v| (spec.point(*v).x - x0).abs() <= 0.5 * delta)
            .collect();
        let right: Vec<Node> = mask
            .nodes()
            .filter(|v| (spec.point(*v).x - (x0 + square.side)).abs() <= 0.5 * delta)
            .collect();
        let got = crossing_length(&grid, square).unwrap().value.finite();
        let want = lattice(&grid, &mask)
            .shortest_path(&indices(&spec, &left), &indices(&spec, &right))
            .map(|b| b.length);
        out.push(compare(
            format!("crossing #{k} {square:?}"),
            mask.count(),
            got,
            want,
            0.0,
        ));
    }
    out
}

fn ring_node_sets(spec: &GridSpec, ann: &AnnulusSpec, mask: &RegionMask, r: f64) -> Vec<usize> {
    let tol = spec.delta() / 2f64.sqrt() * (1.0 + 1e-9);
    let nodes: Vec<Node> = mask
        .nodes()
        .filter(|v| (spec.point(*v).dist(ann.center) - r).abs() <= tol)
        .collect();
    indices(spec, &nodes)
}

pub fn small_annuli(seed: u64, count: usize, open: bool) -> Vec<(AnnulusSpec, RegionMask, u64, bool)> {
    let spec = annulus_grid();
    let delta = spec.delta();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut k = 0;
    while out.len() < count {
        k += 1;
        assert!(k < 100 * count, "no small annuli fit the fixture grid");
        let center = Point::new(rng.random_range(-0.5..0.5) * delta, rng.random_range(-0.5..0.5) * delta);
        let r1 = rng.random_range(if open { 0.8..2.5 } else { 0.1..0.45 }) * delta;
        let r2 = r1 + rng.random_range(4.0..4.3) * delta;
        let ann = AnnulusSpec::new(center, r1, r2);
        let mask = if open {
            ann.open_mask(&spec)
        } else {
            ann.closed_mask(&spec)
        };
        if ann.validate(&spec).is_ok() && mask.count() <= 81 {
            out.push((ann, mask, rng.random(), k % 4 == 0));
        }
    }
    out
}

pub fn annulus_grid() -> GridSpec {
    GridSpec::new(32, 4.0, 2).unwrap()
}

pub fn across_checks(seed: u64, count: usize) -> Vec<Check> {
    let spec = annulus_grid();
    small_annuli(seed, count, false)
        .into_iter()
        .enumerate()
        .map(|(k, (ann, mask, s, zero))| {
            let grid = random_grid(spec, 1.5, s, zero);
            let got = across_annulus(&grid, ann).unwrap().value.finite();
            let inner = ring_node_sets(&spec, &ann, &mask, ann.r1);
            let outer = ring_node_sets(&spec, &ann, &mask, ann.r2);
            let want = lattice(&grid, &mask).shortest_path(&inner, &outer).map(|b| b.length);
            compare(format!("across #{k} {ann:?}"), mask.count(), got, want, 0.0)
        })
        .collect()
}

pub fn around_checks(seed: u64, count: usize) -> Vec<Check> {
    let spec = annulus_grid();
    small_annuli(seed, count, true)
        .into_iter()
        .enumerate()
        .map(|(k, (ann, mask, s, zero))| {
            let grid = random_grid(spec, 1.5, s, zero);
            let r = around_annulus(&grid, ann).unwrap();
            let cycle = r.path.clone().unwrap();
            let (cx, cy) = spec.lattice_coords(ann.center);
            let want = lattice(&grid, &mask).shortest_odd_cycle((cx, cy)).map(|b| b.length);
            let mut check = compare(
                format!("around #{k} {ann:?}"),
                mask.count(),
                r.value.finite(),
                want,
                CYCLE_REL,
            );
            let wind = winding(&spec, &cycle, ann.center);
            if wind % 2 == 0 || cycle.first() != cycle.last() || cycle.iter().any(|v| !mask.contains(*v)) {
                check.ok = false;
                check.detail += &format!("; witness invalid (winding {wind})");
            }
            check
        })
        .collect()
}

/// Violation counts from [`axiom_battery`].
#[derive(Clone, Debug, Default)]
pub struct AxiomTally {
    pub queries: usize,
    pub symmetry: usize,
    pub triangle: usize,
    pub mask: usize,
    pub additivity: usize,
    pub around: usize,
}

impl AxiomTally {
    pub fn violations(&self) -> usize {
        self.symmetry + self.triangle + self.mask + self.additivity + self.around
    }
}

/// `queries` randomized checks, cycling through symmetry, triangle inequality,
/// mask monotonicity, nested across-additivity and around monotonicity, on
/// sampled and mollified fields (a fresh one every 25 queries).
pub fn axiom_battery(seed: u64, queries: usize) -> AxiomTally {
    use lfpp_core::field::{mollify, sample_field};
    let spec = GridSpec::new(128, 1.5, 2).unwrap();
    let delta = spec.delta();
    let eps = 4.0 * delta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = AxiomTally {
        queries,
        ..Default::default()
    };
    let mut grid: Option<WeightedGrid> = None;
    let reach = 1.2;
    for q in 0..queries {
        if q % 25 == 0 {
            let raw = sample_field(&spec, rng.random()).unwrap();
            let xi = rng.random_range(0.2..0.8);
            grid = Some(build_weighted_grid(&mollify(&raw, eps).unwrap(), xi).unwrap());
        }
        let g = grid.as_ref().unwrap();
        let mut pt = || Point::new(rng.random_range(-reach..reach), rng.random_range(-reach..reach));
        let d = |a: Point, b: Point, m: Option<&RegionMask>| distance(g, a, b, m).unwrap().value;
        match q % 5 {
            0 => {
                let (a, b) = (pt(), pt());
                let (ab, ba) = (d(a, b, None), d(b, a, None));
                let aa = d(a, a, None);
                if ab.finite().map(f64::to_bits) != ba.finite().map(f64::to_bits) || aa.finite() != Some(0.0) {
                    tally.symmetry += 1;
                }
            }
            1 => {
                let (a, b, c) = (pt(), pt(), pt());
                let (ac, ab, bc) = (d(a, c, None), d(a, b, None), d(b, c, None));
                if ac.finite().unwrap() > ab.finite().unwrap() + bc.finite().unwrap() + 1e-9 {
                    tally.triangle += 1;
                }
            }
            2 => {
                let (a, b) = (pt(), pt());
                let pad = rng.random_range(0.0..0.3);
                let (x0, x1) = (a.x.min(b.x) - pad, a.x.max(b.x) + pad);
                let (y0, y1) = (a.y.min(b.y) - pad, a.y.max(b.y) + pad);
                let small = RegionMask::from_points(&spec, |p| p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1);
                let (na, nb) = (spec.node_of(a).unwrap(), spec.node_of(b).unwrap());
                if !(small.contains(na) && small.contains(nb)) {
                    continue;
                }
                let inner = d(a, b, Some(&small));
                let outer = d(a, b, None).finite().unwrap();
                if inner.finite().is_some_and(|v| v < outer) {
                    tally.mask += 1;
                }
            }
            3 => {
                let r = rng.random_range(0.1..0.2);
                let c = Point::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
                let across = |r1: f64, r2: f64| {
                    across_annulus(g, AnnulusSpec::new(c, r1, r2))
                        .unwrap()
                        .value
                        .finite()
                        .unwrap()
                };
                if across(r, 4.0 * r) < across(r, 2.0 * r) + across(2.0 * r, 4.0 * r) - 1e-9 {
                    tally.additivity += 1;
                }
            }
            _ => {
                let c = Point::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
                let r1 = rng.random_range(0.1..0.3);
                let r2 = r1 + rng.random_range(0.3..0.6);
                let (s1, s2) = (r1 + rng.random_range(0.0..0.1), r2 - rng.random_range(0.0..0.1));
                let big = around_annulus(g, AnnulusSpec::new(c, r1, r2))
                    .unwrap()
                    .value
                    .finite()
                    .unwrap();
                let small = around_annulus(g, AnnulusSpec::new(c, s1, s2))
                    .unwrap()
                    .value
                    .finite()
                    .unwrap();
                if small < big {
                    tally.around += 1;
                }
            }
        }
    }
    tally
}

/// Empirical circle-average increment variances and mollified covariances.
#[derive(Clone, Debug)]
pub struct FieldStats {
    pub replicas: usize,
    /// `(t, Var(h_{e^-t}(0) - h_1(0)))`.
    pub increments: Vec<(f64, f64)>,
    /// `(|x|, Cov(h_eps(x), h_eps(0)), log(1 / max(|x|, eps)))`.
    pub covariances: Vec<(f64, f64, f64)>,
}

pub const INCREMENT_TIMES: [f64; 3] = [0.5, 1.0, 2.0];
pub const PROBE_SEPARATIONS: [f64; 4] = [1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0];
pub const PROBE_EPS: f64 = 1.0 / 32.0;

fn sample_var(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

fn sample_cov(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0)
}

pub fn field_statistics(spec: GridSpec, replicas: usize, root_seed: u64) -> FieldStats {
    use lfpp_core::estimate::replicate;
    use lfpp_core::field::{circle_average, mollify, sample_field};
    let rows = replicate(replicas, root_seed, |_, seed| {
        let raw = sample_field(&spec, seed)?;
        let h1 = circle_average(&raw, Point::ORIGIN, 1.0)?;
        let mut inc = Vec::new();
        for t in INCREMENT_TIMES {
            inc.push(circle_average(&raw, Point::ORIGIN, (-t).exp())? - h1);
        }
        let m = mollify(&raw, PROBE_EPS)?;
        let at = |x: f64| spec.node_of(Point::new(x, 0.0)).map(|v| m.value(v));
        let mut probes = vec![at(0.0)?];
        for s in PROBE_SEPARATIONS {
            probes.push(at(s)?);
        }
        Ok::<_, lfpp_core::Error>((inc, probes))
    })
    .unwrap();
    let increment = |k: usize| rows.iter().map(|r| r.0[k]).collect::<Vec<f64>>();
    let probe = |k: usize| rows.iter().map(|r| r.1[k]).collect::<Vec<f64>>();
    let increments = INCREMENT_TIMES
        .iter()
        .enumerate()
        .map(|(k, &t)| (t, sample_var(&increment(k))))
        .collect();
    let centre = probe(0);
    let covariances = PROBE_SEPARATIONS
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let c = sample_cov(&probe(k + 1), &centre);
            (s, c, (1.0 / s.max(PROBE_EPS)).ln())
        })
        .collect();
    FieldStats {
        replicas,
        increments,
        covariances,
    }
}
