use std::time::Instant;

use super::{label, ExperimentSpec, Report, ReportBuilder, Verdict};
use crate::error::{Error, Result};
use crate::estimate::{order_quantile, quantile_estimate, xi_for_gamma, SampleSet, DEFAULT_CONFIDENCE};
use crate::grid::{GridSpec, Point};
use crate::lfpp::{build_weighted_grid, distance};
use crate::store::FieldCache;

/// Pair separations of the default battery.
pub const PAIR_DISTANCES: [f64; 3] = [0.25, 0.5, 1.0];

/// Six lattice-snapped pairs centred on the origin: three separations, along the
/// x axis and along the direction `atan(1/2)`.
pub fn pair_battery(grid: &GridSpec) -> Result<Vec<(Point, Point)>> {
    let mut pairs = Vec::with_capacity(6);
    for theta in [0.0, 0.5f64.atan()] {
        let (c, s) = (theta.cos(), theta.sin());
        for d in PAIR_DISTANCES {
            let h = 0.5 * d;
            let z = grid.point(grid.node_of(Point::new(-h * c, -h * s))?);
            let w = grid.point(grid.node_of(Point::new(h * c, h * s))?);
            pairs.push((z, w));
        }
    }
    Ok(pairs)
}

/// Ratios `beta^-1 D(z, w) / |z - w|` along a decreasing gamma ladder.
pub fn run_euclidean_limit(gammas: &[f64], spec: &ExperimentSpec) -> Result<Report> {
    super::run(&spec.clone().with_list("gammas", gammas))
}

pub(super) fn run(spec: &ExperimentSpec, cache: Option<&FieldCache>) -> Result<Report> {
    let started = Instant::now();
    let gammas = spec.require_list("gammas")?;
    if gammas.len() < 2 || gammas.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Config(
            "euclidean_limit: `gammas` needs at least 2 strictly decreasing values".into(),
        ));
    }
    let xis = gammas.iter().map(|&g| xi_for_gamma(g)).collect::<Result<Vec<_>>>()?;
    let eps = spec.eps()?;
    let pairs = pair_battery(&spec.grid)?;
    let unit = (Point::ORIGIN, Point::new(1.0, 0.0));

    // per replica, per arm: D(0, 1) followed by the pair distances
    let rows = spec.monte_carlo(cache).replicate(|r| {
        let m = r.mollified_with(eps, cache)?;
        let arms = xis
            .iter()
            .map(|&xi| {
                let g = build_weighted_grid(&m, xi)?;
                std::iter::once(unit)
                    .chain(pairs.iter().copied())
                    .map(|(z, w)| distance(&g, z, w, None)?.expect_finite("pair distance"))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((r.seed(), arms))
    })?;
    let seeds: Vec<u64> = rows.iter().map(|(s, _)| *s).collect();

    let mut b = ReportBuilder::new();
    b.unit("d01", "lfpp");
    let names: Vec<String> = (0..pairs.len()).map(|i| format!("ratio_{i}")).collect();
    for n in &names {
        b.unit(n, "1");
    }
    let mut spreads = Vec::with_capacity(gammas.len());
    let mut medians = Vec::with_capacity(gammas.len());
    for (k, (&gamma, &xi)) in gammas.iter().zip(&xis).enumerate() {
        let arm = label("gamma", gamma);
        let d01: Vec<f64> = rows.iter().map(|(_, a)| a[k][0]).collect();
        let set = SampleSet::new(format!("distance:0..1:{arm}"), d01, seeds.clone())?;
        let beta = quantile_estimate(&set, 0.5, DEFAULT_CONFIDENCE)?;
        let mut pooled = Vec::with_capacity(rows.len() * pairs.len());
        for (i, (seed, arms)) in rows.iter().enumerate() {
            let mut values = vec![("d01", arms[k][0])];
            for (j, (z, w)) in pairs.iter().enumerate() {
                let ratio = arms[k][j + 1] / beta.point / z.dist(*w);
                pooled.push(ratio);
                values.push((names[j].as_str(), ratio));
            }
            b.record(arm.clone(), i, *seed, &values);
        }
        let median = order_quantile(&pooled, 0.5);
        let spread = order_quantile(&pooled, 0.9) - order_quantile(&pooled, 0.1);
        b.metric(format!("xi:{arm}"), xi);
        b.metric(format!("beta:{arm}"), beta.point);
        b.metric(format!("median_ratio:{arm}"), median);
        b.metric(format!("spread:{arm}"), spread);
        spreads.push(spread);
        medians.push(median);
    }

    let min_step = spreads.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    b.metric("spread_min_decrease", min_step);
    b.verdict(
        "spread_decreasing",
        Verdict::statistical(
            min_step > 0.0,
            "spread_min_decrease",
            format!("interdecile spreads along the ladder: {spreads:?}"),
            spec.replicas,
            Some(1.0 - DEFAULT_CONFIDENCE),
        ),
    );
    let last = *medians.last().unwrap();
    let last_key = format!("median_ratio:{}", label("gamma", *gammas.last().unwrap()));
    b.verdict(
        "median_ratio_near_one",
        Verdict::statistical(
            (0.8..=1.25).contains(&last),
            &last_key,
            format!("median ratio {last} at the smallest gamma, accepted range [0.8, 1.25]"),
            spec.replicas * pairs.len(),
            Some(1.0 - DEFAULT_CONFIDENCE),
        ),
    );
    b.finish(spec, started)
}
