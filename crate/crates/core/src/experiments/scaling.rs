use std::time::Instant;

use super::{label, ExperimentSpec, Report, ReportBuilder, Verdict};
use crate::error::{Error, Result};
use crate::estimate::{fit_scaling_exponent, ols, order_quantile, DEFAULT_CONFIDENCE};
use crate::grid::Point;
use crate::lfpp::{across_annulus, build_weighted_grid, crossing_length, AnnulusSpec, Square};
use crate::store::FieldCache;

const DEFAULT_TOLERANCE: f64 = 0.1;
/// Two standard errors: roughly a 95% band for the difference of two estimates.
const CI_Z: f64 = 2.0;

/// Regression of median `ln D(across r < |z| < 2r)` on `ln r`.
pub fn run_annulus_scaling(xi: f64, radii: &[f64], spec: &ExperimentSpec) -> Result<Report> {
    super::run(&spec.clone().with_scalar("xi", xi).with_list("radii", radii))
}

pub(super) fn run(spec: &ExperimentSpec, cache: Option<&FieldCache>) -> Result<Report> {
    let started = Instant::now();
    let xi = spec.require_scalar("xi")?;
    let radii = spec.require_list("radii")?;
    if radii.len() < 3 || radii.windows(2).any(|w| !(w[0] < w[1])) || radii[0] <= 0.0 {
        return Err(Error::Config(
            "annulus_scaling: `radii` needs at least 3 positive, strictly increasing values".into(),
        ));
    }
    let eps = spec.eps()?;
    let ladder = spec.list("eps_ladder")?;
    let target = spec.scalar("target")?;
    let tolerance = spec.scalar_or("tolerance", DEFAULT_TOLERANCE)?;

    let rows = spec.monte_carlo(cache).replicate(|r| {
        let m = r.mollified_with(eps, cache)?;
        let g = build_weighted_grid(&m, xi)?;
        let across = radii
            .iter()
            .map(|&rad| {
                across_annulus(&g, AnnulusSpec::new(Point::ORIGIN, rad, 2.0 * rad))?.expect_finite("across annulus")
            })
            .collect::<Result<Vec<_>>>()?;
        let crossings = match &ladder {
            Some(ladder) => ladder
                .iter()
                .map(|&e| {
                    let g = build_weighted_grid(&r.mollified_with(e, cache)?, xi)?;
                    crossing_length(&g, Square::UNIT)?.expect_finite("unit square crossing")
                })
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        Ok((r.seed(), across, crossings))
    })?;

    let mut b = ReportBuilder::new();
    b.unit("across", "lfpp");
    let mut log_r = Vec::new();
    let mut log_d = Vec::new();
    for (k, &rad) in radii.iter().enumerate() {
        let arm = label("r", rad);
        let values: Vec<f64> = rows.iter().map(|(_, a, _)| a[k]).collect();
        for (i, (seed, _, _)) in rows.iter().enumerate() {
            b.record(arm.clone(), i, *seed, &[("across", values[i])]);
        }
        let med = order_quantile(&values, 0.5).ln();
        b.metric(format!("median_log_d:{arm}"), med);
        log_r.push(rad.ln());
        log_d.push(med);
    }
    let fit = ols(&log_r, &log_d)?;
    b.metric("slope", fit.slope);
    b.metric("slope_stderr", fit.stderr);
    b.metric("r2", fit.r2);

    if let Some(ladder) = &ladder {
        let points = ladder
            .iter()
            .enumerate()
            .map(|(e, &eps)| {
                let values: Vec<f64> = rows.iter().map(|(_, _, c)| c[e]).collect();
                (eps, order_quantile(&values, 0.5))
            })
            .collect::<Vec<_>>();
        let crossing = fit_scaling_exponent(&points)?;
        let implied = 1.0 - crossing.slope;
        let gap = (fit.slope - implied).abs();
        let band = CI_Z * (fit.stderr.powi(2) + crossing.stderr.powi(2)).sqrt();
        b.metric("crossing_slope", crossing.slope);
        b.metric("crossing_implied_xi_q", implied);
        b.metric("exponent_gap", gap);
        b.metric("exponent_gap_band", band);
        b.verdict(
            "matches_crossing_exponent",
            Verdict::statistical(
                gap <= band,
                "exponent_gap",
                format!(
                    "annulus slope {} vs 1 - crossing slope {implied} (band {band})",
                    fit.slope
                ),
                spec.replicas,
                Some(1.0 - DEFAULT_CONFIDENCE),
            ),
        );
    }
    if let Some(target) = target {
        b.verdict(
            "slope_target",
            Verdict::statistical(
                (fit.slope - target).abs() <= tolerance,
                "slope",
                format!("slope {} vs target {target} +- {tolerance}", fit.slope),
                spec.replicas,
                Some(1.0 - DEFAULT_CONFIDENCE),
            ),
        );
    }
    b.finish(spec, started)
}
