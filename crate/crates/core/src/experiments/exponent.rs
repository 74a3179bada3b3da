use std::time::Instant;

use super::{label, ExperimentSpec, Report, ReportBuilder, Verdict};
use crate::error::{Error, Result};
use crate::estimate::{fit_scaling_exponent, quantile_estimate, SampleSet, DEFAULT_CONFIDENCE, GAMMA_PURE_GRAVITY};
use crate::field::FieldSource;
use crate::lfpp::{build_weighted_grid, crossing_length, Square};
use crate::store::FieldCache;

/// `xi = sqrt(8/3) / 4`, where the crossing exponent `1 - xi Q` is exactly 1/6.
pub const XI_PURE_GRAVITY: f64 = GAMMA_PURE_GRAVITY / 4.0;
pub const PURE_GRAVITY_SLOPE: f64 = 1.0 / 6.0;
const DEFAULT_TOLERANCE: f64 = 0.08;
const TARGET_MATCH: f64 = 1e-5;
const INJECTION_TOLERANCE: f64 = 1e-9;

/// Slope of `ln a_eps` against `ln eps` implied by a deterministic hook.
pub(super) fn injected_slope(source: FieldSource, xi: f64) -> Option<f64> {
    match source {
        FieldSource::Gff => None,
        FieldSource::EpsScaling { kappa } => Some(-xi * kappa),
        FieldSource::Zero | FieldSource::Constant { .. } | FieldSource::LogRadial { .. } => Some(0.0),
    }
}

/// Median crossing lengths over an eps ladder and the fitted exponent per xi.
pub fn run_exponent_scan(xis: &[f64], eps_ladder: &[f64], spec: &ExperimentSpec) -> Result<Report> {
    super::run(&spec.clone().with_list("xis", xis).with_list("eps_ladder", eps_ladder))
}

pub(super) fn run(spec: &ExperimentSpec, cache: Option<&FieldCache>) -> Result<Report> {
    let started = Instant::now();
    let xis = spec.require_list("xis")?;
    let ladder = spec.require_list("eps_ladder")?;
    if xis.windows(2).any(|w| !(w[0] < w[1])) || xis.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Config(
            "exponent_scan: `xis` must be positive and strictly increasing".into(),
        ));
    }
    if ladder.len() < 3 || ladder.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Config(
            "exponent_scan: `eps_ladder` needs at least 3 strictly decreasing values".into(),
        ));
    }
    let target_xi = spec.scalar_or("target_xi", XI_PURE_GRAVITY)?;
    let tolerance = spec.scalar_or("tolerance", DEFAULT_TOLERANCE)?;

    // rows[replica][e * xis.len() + x]
    let rows = spec.monte_carlo(cache).replicate(|r| {
        let mut out = Vec::with_capacity(ladder.len() * xis.len());
        for &eps in &ladder {
            let m = r.mollified_with(eps, cache)?;
            for &xi in &xis {
                let g = build_weighted_grid(&m, xi)?;
                out.push(crossing_length(&g, Square::UNIT)?.expect_finite("unit square crossing")?);
            }
        }
        Ok((r.seed(), out))
    })?;
    let seeds: Vec<u64> = rows.iter().map(|(s, _)| *s).collect();

    let mut b = ReportBuilder::new();
    b.unit("crossing", "lfpp");
    let mut q_hats = Vec::with_capacity(xis.len());
    for (x, &xi) in xis.iter().enumerate() {
        let xl = label("xi", xi);
        let mut points = Vec::with_capacity(ladder.len());
        for (e, &eps) in ladder.iter().enumerate() {
            let arm = format!("{xl}:{}", label("eps", eps));
            let col = e * xis.len() + x;
            let values: Vec<f64> = rows.iter().map(|(_, v)| v[col]).collect();
            for (i, &v) in values.iter().enumerate() {
                b.record(arm.clone(), i, seeds[i], &[("crossing", v)]);
            }
            let set = SampleSet::new(format!("crossing:{arm}"), values, seeds.clone())?;
            let a = quantile_estimate(&set, 0.5, DEFAULT_CONFIDENCE)?;
            b.metric(format!("a_eps:{arm}"), a.point);
            b.metric(format!("a_eps_ci_lo:{arm}"), a.ci_lo);
            b.metric(format!("a_eps_ci_hi:{arm}"), a.ci_hi);
            points.push((eps, a.point));
        }
        let fit = fit_scaling_exponent(&points)?;
        let q_hat = (1.0 - fit.slope) / xi;
        let slope_key = format!("slope:{xl}");
        b.metric(slope_key.clone(), fit.slope);
        b.metric(format!("slope_stderr:{xl}"), fit.stderr);
        b.metric(format!("r2:{xl}"), fit.r2);
        b.metric(format!("q_hat:{xl}"), q_hat);
        q_hats.push(q_hat);

        if let Some(expected) = injected_slope(spec.source, xi) {
            let err = (fit.slope - expected).abs();
            b.metric(format!("injection_error:{xl}"), err);
            b.verdict(
                &format!("injection_recovered:{xl}"),
                Verdict::hard(
                    err <= INJECTION_TOLERANCE,
                    &format!("injection_error:{xl}"),
                    format!("fitted slope {} vs injected {expected}", fit.slope),
                ),
            );
        } else if (xi - target_xi).abs() <= TARGET_MATCH {
            let dev = (fit.slope - PURE_GRAVITY_SLOPE).abs();
            let mut v = Verdict::statistical(
                dev <= tolerance,
                &slope_key,
                format!(
                    "slope {} (stderr {}) vs target 1/6 +- {tolerance}",
                    fit.slope, fit.stderr
                ),
                spec.replicas,
                Some(1.0 - DEFAULT_CONFIDENCE),
            );
            if fit.slope <= 0.0 {
                v = v.escalate(format!("slope {} has the wrong sign (target 1/6)", fit.slope));
            }
            b.verdict("slope_target", v);
        }
    }
    if xis.len() >= 2 {
        let min_step = q_hats.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        b.metric("q_hat_min_decrease", min_step);
        b.verdict(
            "q_hat_decreasing",
            Verdict::statistical(
                min_step > 0.0,
                "q_hat_min_decrease",
                format!("implied Q along increasing xi: {q_hats:?}"),
                spec.replicas,
                Some(1.0 - DEFAULT_CONFIDENCE),
            ),
        );
    }
    b.finish(spec, started)
}
