use std::time::Instant;

use super::{label, ExperimentSpec, Report, ReportBuilder, Verdict};
use crate::error::{Error, Result};
use crate::estimate::{order_quantile, quantile_estimate, SampleSet, DEFAULT_CONFIDENCE};
use crate::grid::Point;
use crate::lfpp::{across_annulus, around_annulus, build_weighted_grid, paths_intersect, AnnulusSpec};
use crate::store::FieldCache;

pub const DEFAULT_P: f64 = 0.9;
const MAX_Q95_RATIO: f64 = 10.0;

/// Tightness proxy for `(alpha(xi)^-1 D)^(1/xi)` as `xi` grows.
pub fn run_xi_infty(xis: &[f64], spec: &ExperimentSpec) -> Result<Report> {
    super::run(&spec.clone().with_list("xis", xis))
}

pub(super) fn run(spec: &ExperimentSpec, cache: Option<&FieldCache>) -> Result<Report> {
    let started = Instant::now();
    let xis = spec.require_list("xis")?;
    if xis.windows(2).any(|w| !(w[0] < w[1])) || xis.iter().any(|&x| x < 1.0) {
        return Err(Error::Config(
            "xi_infty: `xis` must be strictly increasing and at least 1".into(),
        ));
    }
    let p = spec.scalar_or("p", DEFAULT_P)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config(format!("xi_infty: p = {p} must lie in (0, 1)")));
    }
    let eps = spec.eps()?;
    let ann = AnnulusSpec::new(Point::ORIGIN, 1.0, 2.0);

    // per replica, per xi: (around, across, witnesses intersect)
    let rows = spec.monte_carlo(cache).replicate(|r| {
        let m = r.mollified_with(eps, cache)?;
        let arms = xis
            .iter()
            .map(|&xi| {
                let g = build_weighted_grid(&m, xi)?;
                let around = around_annulus(&g, ann)?;
                let across = across_annulus(&g, ann)?;
                let meet = match (&around.path, &across.path) {
                    (Some(a), Some(b)) => paths_intersect(a, b),
                    _ => false,
                };
                Ok((
                    around.expect_finite("around annulus")?,
                    across.expect_finite("across annulus")?,
                    meet,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((r.seed(), arms))
    })?;
    let seeds: Vec<u64> = rows.iter().map(|(s, _)| *s).collect();

    let mut b = ReportBuilder::new();
    b.unit("around", "lfpp");
    b.unit("across", "lfpp");
    b.unit("rescaled", "lfpp^(1/xi)");
    b.unit("witnesses_meet", "bool");
    let mut q05s = Vec::new();
    let mut q95s = Vec::new();
    let mut missed = 0usize;
    for (k, &xi) in xis.iter().enumerate() {
        let arm = label("xi", xi);
        let around: Vec<f64> = rows.iter().map(|(_, a)| a[k].0).collect();
        let set = SampleSet::new(format!("around:r=1..2:{arm}"), around, seeds.clone())?;
        let alpha = quantile_estimate(&set, p, DEFAULT_CONFIDENCE)?;
        let mut rescaled = Vec::with_capacity(rows.len());
        for (i, (seed, arms)) in rows.iter().enumerate() {
            let (around, across, meet) = arms[k];
            let v = (across / alpha.point).powf(1.0 / xi);
            missed += usize::from(!meet);
            rescaled.push(v);
            b.record(
                arm.clone(),
                i,
                *seed,
                &[
                    ("around", around),
                    ("across", across),
                    ("rescaled", v),
                    ("witnesses_meet", f64::from(u8::from(meet))),
                ],
            );
        }
        let q = |p| order_quantile(&rescaled, p);
        b.metric(format!("alpha:{arm}"), alpha.point);
        b.metric(format!("q05:{arm}"), q(0.05));
        b.metric(format!("q25:{arm}"), q(0.25));
        b.metric(format!("q75:{arm}"), q(0.75));
        b.metric(format!("q95:{arm}"), q(0.95));
        b.metric(format!("iqr:{arm}"), q(0.75) - q(0.25));
        q05s.push(q(0.05));
        q95s.push(q(0.95));
    }

    let hi = q95s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = q95s.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = hi / lo.max(f64::MIN_POSITIVE);
    let q05_min = q05s.iter().copied().fold(f64::INFINITY, f64::min);
    b.metric("q95_ratio", ratio);
    b.metric("q05_min", q05_min);
    b.metric("witness_misses", missed as f64);
    b.verdict(
        "q95_bounded",
        Verdict::statistical(
            ratio < MAX_Q95_RATIO,
            "q95_ratio",
            format!("0.95-quantiles {q95s:?} vary by a factor {ratio} (limit {MAX_Q95_RATIO})"),
            spec.replicas,
            Some(1.0 - DEFAULT_CONFIDENCE),
        ),
    );
    b.verdict(
        "q05_positive",
        Verdict::statistical(
            q05_min > 0.0,
            "q05_min",
            format!("0.05-quantiles {q05s:?}"),
            spec.replicas,
            Some(1.0 - DEFAULT_CONFIDENCE),
        ),
    );
    b.verdict(
        "witness_intersection",
        Verdict::hard(
            missed == 0,
            "witness_misses",
            format!("{missed} across geodesics missed their around cycle"),
        ),
    );
    b.note(format!(
        "alpha is the {p}-quantile of the around distance of 1 < |z| < 2"
    ));
    b.finish(spec, started)
}
