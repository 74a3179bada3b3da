use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ExperimentSpec, Report, ReportBuilder, Verdict};
use crate::error::{Error, Result};
use crate::estimate::replicate;
use crate::field::add_function;
use crate::grid::{GridSpec, Point};
use crate::lfpp::{
    across_annulus, around_annulus, build_weighted_grid, crossing_length, distance, AnnulusSpec, Square, WeightedGrid,
};
use crate::store::{derive_seed, FieldCache};

const DEFAULT_QUERIES: usize = 100;
/// Relative tolerance of the constant-shift identity.
pub const WEYL_TOLERANCE: f64 = 1e-12;
/// Seed stream for query placement, disjoint from replica streams in practice.
const QUERY_STREAM: u64 = 0x5745_594C;
const BUMP_CENTER: Point = Point::new(0.1, -0.2);
const BUMP_WIDTH: f64 = 0.3;

#[derive(Clone, Copy, Debug)]
enum Query {
    Pair(Point, Point),
    Crossing,
    Across(AnnulusSpec),
    Around(AnnulusSpec),
}

impl Query {
    fn eval(self, g: &WeightedGrid) -> Result<f64> {
        let r = match self {
            Query::Pair(a, b) => distance(g, a, b, None)?,
            Query::Crossing => crossing_length(g, Square::UNIT)?,
            Query::Across(a) => across_annulus(g, a)?,
            Query::Around(a) => around_annulus(g, a)?,
        };
        r.expect_finite("weyl query")
    }
}

/// Structural queries that fit the window, then random point pairs.
fn battery(grid: &GridSpec, total: usize, seed: u64) -> Vec<Query> {
    let delta = grid.delta();
    let mut out = Vec::new();
    if grid.clearance(Point::new(1.0, 1.0)) >= 0.0 {
        out.push(Query::Crossing);
    }
    let ann = AnnulusSpec::new(Point::ORIGIN, 0.25, 0.5);
    if ann.validate(grid).is_ok() {
        out.push(Query::Across(ann));
        out.push(Query::Around(ann));
    }
    out.truncate(total);
    let reach = 0.8 * (grid.half_width() - 2.0 * delta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < total {
        let mut pt = || Point::new(rng.random_range(-reach..reach), rng.random_range(-reach..reach));
        out.push(Query::Pair(pt(), pt()));
    }
    out
}

fn bump(amplitude: f64) -> impl Fn(Point) -> f64 {
    move |p| {
        let r2 = (p.x - BUMP_CENTER.x).powi(2) + (p.y - BUMP_CENTER.y).powi(2);
        amplitude * (-r2 / (2.0 * BUMP_WIDTH * BUMP_WIDTH)).exp()
    }
}

fn range_of(grid: &GridSpec, f: &impl Fn(Point) -> f64) -> (f64, f64) {
    (0..grid.len())
        .map(|i| f(grid.point_of_index(i)))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Weyl scaling: exact for a constant shift `c`, a two-sided bound for a bump.
pub fn run_weyl_check(xi: f64, c: Option<f64>, bump_amplitude: Option<f64>, spec: &ExperimentSpec) -> Result<Report> {
    let mut s = spec.clone().with_scalar("xi", xi);
    if let Some(c) = c {
        s = s.with_scalar("c", c);
    }
    if let Some(a) = bump_amplitude {
        s = s.with_scalar("bump", a);
    }
    super::run(&s)
}

struct Outcomes {
    shift: Vec<(usize, u64, f64, f64)>,
    bump: Vec<(usize, u64, f64, f64)>,
}

pub(super) fn run(spec: &ExperimentSpec, cache: Option<&FieldCache>) -> Result<Report> {
    let started = Instant::now();
    let xi = spec.require_scalar("xi")?;
    let c = spec.scalar("c")?;
    let amp = spec.scalar("bump")?;
    if c.is_none() && amp.is_none() {
        return Err(Error::Config(
            "weyl_check: give a constant `c`, a `bump` amplitude, or both".into(),
        ));
    }
    let total = spec.scalar_or("queries", DEFAULT_QUERIES as f64)?;
    if !(total >= 1.0 && total.fract() == 0.0) {
        return Err(Error::Config(format!(
            "weyl_check: queries = {total} must be a positive integer"
        )));
    }
    let total = total as usize;
    let eps = spec.eps()?;
    let grid = spec.grid;
    let queries = battery(&grid, total, derive_seed(spec.root_seed, QUERY_STREAM));
    let fields = spec.replicas.min(total);
    let f = amp.map(bump);
    let f_range = f.as_ref().map(|f| range_of(&grid, f));

    let per_field = replicate(fields, spec.root_seed, |index, seed| {
        let r = spec.source.realize_with(&grid, seed, cache)?;
        let m = r.mollified_with(eps, cache)?;
        let g = build_weighted_grid(&m, xi)?;
        let shifted = match c {
            Some(c) => Some(build_weighted_grid(&add_function(&m, |_| c)?, xi)?),
            None => None,
        };
        let bumped = match &f {
            Some(f) => Some(build_weighted_grid(&add_function(&m, f)?, xi)?),
            None => None,
        };
        let mut out = Outcomes {
            shift: Vec::new(),
            bump: Vec::new(),
        };
        for (q, query) in queries.iter().enumerate().filter(|(q, _)| q % fields == index) {
            let base = query.eval(&g)?;
            if let Some(gs) = &shifted {
                out.shift.push((q, seed, base, query.eval(gs)?));
            }
            if let Some(gb) = &bumped {
                out.bump.push((q, seed, base, query.eval(gb)?));
            }
        }
        Ok::<_, Error>(out)
    })?;
    let mut shift: Vec<_> = per_field.iter().flat_map(|o| o.shift.iter().copied()).collect();
    let mut bumped: Vec<_> = per_field.iter().flat_map(|o| o.bump.iter().copied()).collect();
    shift.sort_by_key(|r| r.0);
    bumped.sort_by_key(|r| r.0);

    let mut b = ReportBuilder::new();
    for col in ["d_h", "d_h_plus_f", "lower", "upper"] {
        b.unit(col, "lfpp");
    }
    b.unit("factor", "1");
    b.unit("expected", "1");
    b.metric("queries", total as f64);
    if let Some(c) = c {
        let expected = (xi * c).exp();
        let mut worst: f64 = 0.0;
        let mut mismatches = 0usize;
        for &(q, seed, d, dc) in &shift {
            let factor = dc / d;
            worst = worst.max((factor / expected - 1.0).abs());
            mismatches += usize::from(d.to_bits() != dc.to_bits());
            b.record(
                "constant",
                q,
                seed,
                &[
                    ("d_h", d),
                    ("d_h_plus_f", dc),
                    ("factor", factor),
                    ("expected", expected),
                ],
            );
        }
        b.metric("shift_factor", expected);
        b.metric("shift_max_rel_error", worst);
        b.verdict(
            "constant_shift_exact",
            Verdict::hard(
                worst <= WEYL_TOLERANCE,
                "shift_max_rel_error",
                format!("D(h + {c}) / D(h) vs e^(xi c) = {expected}: worst relative error {worst}"),
            ),
        );
        if c == 0.0 {
            b.metric("bit_mismatches", mismatches as f64);
            b.verdict(
                "zero_shift_bit_identical",
                Verdict::hard(
                    mismatches == 0,
                    "bit_mismatches",
                    format!("{mismatches} queries differ"),
                ),
            );
        }
    }
    if let Some((lo, hi)) = f_range {
        let mut violations = 0usize;
        for &(q, seed, d, df) in &bumped {
            let (lower, upper) = ((xi * lo).exp() * d, (xi * hi).exp() * d);
            let ok = df >= lower * (1.0 - WEYL_TOLERANCE) && df <= upper * (1.0 + WEYL_TOLERANCE);
            violations += usize::from(!ok);
            b.record(
                "bump",
                q,
                seed,
                &[("d_h", d), ("d_h_plus_f", df), ("lower", lower), ("upper", upper)],
            );
        }
        b.metric("bump_min", lo);
        b.metric("bump_max", hi);
        b.metric("sandwich_violations", violations as f64);
        b.verdict(
            "bump_sandwich",
            Verdict::hard(
                violations == 0,
                "sandwich_violations",
                format!(
                    "{violations} of {} queries outside e^(xi min f) D <= D(h + f) <= e^(xi max f) D",
                    bumped.len()
                ),
            ),
        );
    }
    b.finish(spec, started)
}
