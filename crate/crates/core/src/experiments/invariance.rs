use std::time::Instant;

use super::{ExperimentSpec, Report, ReportBuilder, Verdict};
use crate::error::{Error, Result};
use crate::estimate::{ks_critical_95, ks_statistic};
use crate::field::{circle_average, Field};
use crate::grid::{Node, Point};
use crate::lfpp::{across_annulus, build_weighted_grid, AnnulusSpec};
use crate::store::FieldCache;

const DEFAULT_R1: f64 = 0.25;
const DEFAULT_R2: f64 = 0.5;
const DEFAULT_SHIFT: [f64; 2] = [0.5, 0.0];

/// The field rotated by 90 degrees about the origin node: `g(x) = f(R^-1 x)`.
/// Nodes whose preimage falls off the grid get 0; queries must stay clear of them.
pub fn rotate_quarter(field: &Field) -> Result<Field> {
    let spec = *field.spec();
    let n = spec.n();
    let values = (0..spec.len())
        .map(|i| {
            let v = spec.node(i);
            // R^-1 (i, j) = (j, -i) about the origin node (n/2, n/2)
            let (sx, sy) = (v.iy, n - v.ix);
            if sy < n {
                field.value(Node::new(sx, sy))
            } else {
                0.0
            }
        })
        .collect();
    Ok(Field::from_values(spec, values)?.into_synthetic_mollified(field.kind().eps().unwrap_or(0.0), field.seed()))
}

/// Translation invariance of across-annulus laws after re-centring.
pub fn run_invariance_check(xi: f64, spec: &ExperimentSpec) -> Result<Report> {
    super::run(&spec.clone().with_scalar("xi", xi))
}

pub(super) fn run(spec: &ExperimentSpec, cache: Option<&FieldCache>) -> Result<Report> {
    let started = Instant::now();
    let xi = spec.require_scalar("xi")?;
    let r1 = spec.scalar_or("r1", DEFAULT_R1)?;
    let r2 = spec.scalar_or("r2", DEFAULT_R2)?;
    let shift = spec.list("shift")?.unwrap_or(DEFAULT_SHIFT.to_vec());
    let [sx, sy] = shift[..] else {
        return Err(Error::Config("invariance_check: `shift` must be a list [x, y]".into()));
    };
    let eps = spec.eps()?;
    let z0 = Point::new(sx, sy);
    let (home, moved) = (AnnulusSpec::new(Point::ORIGIN, r1, r2), AnnulusSpec::new(z0, r1, r2));

    let rows = spec.monte_carlo(cache).replicate(|r| {
        let m = r.mollified_with(eps, cache)?;
        let g = build_weighted_grid(&m, xi)?;
        let a = across_annulus(&g, home)?.expect_finite("across annulus")?;
        // shifting h by the constant -h_1(z0) scales every length by e^(-xi h_1(z0))
        let recenter = match r.raw() {
            Some(raw) => circle_average(raw, z0, 1.0)?,
            None => 0.0,
        };
        let b = across_annulus(&g, moved)?.expect_finite("across annulus")? * (-xi * recenter).exp();
        Ok((r.seed(), a, b, recenter, m))
    })?;

    let mut b = ReportBuilder::new();
    b.unit("origin", "lfpp");
    b.unit("shifted", "lfpp");
    b.unit("recenter", "field");
    for (i, (seed, a, s, c, _)) in rows.iter().enumerate() {
        b.record("pair", i, *seed, &[("origin", *a), ("shifted", *s), ("recenter", *c)]);
    }
    let home_vals: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let moved_vals: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let ks = ks_statistic(&home_vals, &moved_vals)?;
    let crit = ks_critical_95(home_vals.len(), moved_vals.len());
    b.metric("ks", ks);
    b.metric("ks_critical", crit);
    b.verdict(
        "translation_ks",
        Verdict::statistical(
            ks < crit,
            "ks",
            format!("KS {ks} vs 95% critical value {crit}"),
            home_vals.len(),
            Some(0.05),
        ),
    );

    // relabeling check on the first replica: rotating field and geometry together
    let (_, a0, _, _, m0) = &rows[0];
    let rotated = build_weighted_grid(&rotate_quarter(m0)?, xi)?;
    let a_rot = across_annulus(&rotated, home)?.expect_finite("across annulus")?;
    let diff = (a_rot - a0).abs();
    b.metric("rotation_abs_diff", diff);
    b.verdict(
        "rotation_relabeling",
        Verdict::hard(
            diff == 0.0,
            "rotation_abs_diff",
            format!("rotated {a_rot} vs original {a0}"),
        ),
    );
    b.note("both arms use the same fields; the KS critical value assumes independent samples and is conservative here");
    b.finish(spec, started)
}
