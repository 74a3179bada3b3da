use std::time::Instant;

use super::{label, ExperimentSpec, Report, ReportBuilder, Verdict};
use crate::error::{Error, Result};
use crate::estimate::{ks_statistic, quantile_estimate, xi_for_gamma, SampleSet, DEFAULT_CONFIDENCE};
use crate::grid::Point;
use crate::lfpp::{build_weighted_grid, distance};
use crate::store::FieldCache;

/// Continuity in `gamma`: KS distances between normalized `D(0, 1)` laws.
pub fn run_continuity(gammas: &[f64], spec: &ExperimentSpec) -> Result<Report> {
    super::run(&spec.clone().with_list("gammas", gammas))
}

pub(super) fn run(spec: &ExperimentSpec, cache: Option<&FieldCache>) -> Result<Report> {
    let started = Instant::now();
    let gammas = spec.require_list("gammas")?;
    if gammas.len() < 3 || gammas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config(
            "continuity: `gammas` needs at least 3 strictly increasing values".into(),
        ));
    }
    let xis = gammas.iter().map(|&g| xi_for_gamma(g)).collect::<Result<Vec<_>>>()?;
    let eps = spec.eps()?;
    let (z, w) = (Point::ORIGIN, Point::new(1.0, 0.0));

    // one field per replica, shared by every gamma arm
    let rows = spec.monte_carlo(cache).replicate(|r| {
        let m = r.mollified_with(eps, cache)?;
        let d = xis
            .iter()
            .map(|&xi| distance(&build_weighted_grid(&m, xi)?, z, w, None)?.expect_finite("D(0, 1)"))
            .collect::<Result<Vec<_>>>()?;
        Ok((r.seed(), d))
    })?;
    let seeds: Vec<u64> = rows.iter().map(|(s, _)| *s).collect();

    let mut b = ReportBuilder::new();
    b.unit("d", "lfpp");
    b.unit("d_hat", "1");
    let mut normalized = Vec::with_capacity(gammas.len());
    for (k, (&gamma, &xi)) in gammas.iter().zip(&xis).enumerate() {
        let arm = label("gamma", gamma);
        let raw: Vec<f64> = rows.iter().map(|(_, d)| d[k]).collect();
        let set = SampleSet::new(format!("distance:0..1:{arm}"), raw.clone(), seeds.clone())?;
        let beta = quantile_estimate(&set, 0.5, DEFAULT_CONFIDENCE)?;
        let hat: Vec<f64> = raw.iter().map(|d| d / beta.point).collect();
        for (i, (&d, &h)) in raw.iter().zip(&hat).enumerate() {
            b.record(arm.clone(), i, seeds[i], &[("d", d), ("d_hat", h)]);
        }
        b.metric(format!("xi:{arm}"), xi);
        b.metric(format!("beta:{arm}"), beta.point);
        b.metric(format!("beta_ci_lo:{arm}"), beta.ci_lo);
        b.metric(format!("beta_ci_hi:{arm}"), beta.ci_hi);
        normalized.push(hat);
    }

    let k = gammas.len();
    let mut ks = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            ks[i][j] = ks_statistic(&normalized[i], &normalized[j])?;
            b.metric(
                format!("ks:{}:{}", label("gamma", gammas[i]), label("gamma", gammas[j])),
                ks[i][j],
            );
        }
    }
    let consecutive = (0..k - 1).map(|i| ks[i][i + 1]).fold(0.0, f64::max);
    let extreme = ks[0][k - 1];
    b.metric("ks_max_consecutive", consecutive);
    b.metric("ks_extreme", extreme);
    b.verdict(
        "ks_shrinks_with_parameter_distance",
        Verdict::statistical(
            consecutive <= extreme,
            "ks_max_consecutive",
            format!("max consecutive KS {consecutive} vs extreme-pair KS {extreme}"),
            spec.replicas,
            Some(1.0 - DEFAULT_CONFIDENCE),
        ),
    );
    b.note("xi for each gamma is the midpoint of the provable enclosure (gamma / d_upper, gamma / 2)");
    b.finish(spec, started)
}
