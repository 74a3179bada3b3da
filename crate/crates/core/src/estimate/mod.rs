//! Monte Carlo normalizers, exponent fits and distribution statistics.

mod analytic;
mod stats;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{FieldSource, Realization};
use crate::grid::{GridSpec, Point};
use crate::lfpp::{around_annulus, build_weighted_grid, crossing_length, distance, AnnulusSpec, Square};
use crate::store::{derive_seed, FieldCache};

pub use analytic::{d_gamma_upper, q_subcritical, xi_bounds_of_gamma, xi_for_gamma, GAMMA_PURE_GRAVITY};
pub use stats::{
    fit_scaling_exponent, ks_critical_95, ks_statistic, ols, order_quantile, quantile_estimate, ExponentFit, LineFit,
    QuantileEstimate, SampleSet, DEFAULT_CONFIDENCE,
};

pub const MIN_REPLICAS: usize = 16;

/// Runs `f(index, seed)` for every replica (in parallel) and returns results in
/// replica order. The first failing replica, by index, aborts the batch.
pub fn replicate<T, F>(replicas: usize, root_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..replicas)
        .into_par_iter()
        .map(|i| f(i, derive_seed(root_seed, i as u64)))
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Replica {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Shared settings for the replica-based estimators.
#[derive(Clone, Debug)]
pub struct MonteCarlo {
    pub grid: GridSpec,
    pub replicas: usize,
    pub root_seed: u64,
    pub source: FieldSource,
    pub cache: Option<FieldCache>,
}

impl MonteCarlo {
    pub fn new(grid: GridSpec, replicas: usize, root_seed: u64) -> Self {
        MonteCarlo {
            grid,
            replicas,
            root_seed,
            source: FieldSource::Gff,
            cache: None,
        }
    }

    pub fn with_source(mut self, source: FieldSource) -> Self {
        self.source = source;
        self
    }

    pub fn with_cache(mut self, cache: Option<FieldCache>) -> Self {
        self.cache = cache;
        self
    }

    fn check(&self) -> Result<()> {
        if self.replicas < MIN_REPLICAS {
            return Err(Error::Domain(format!(
                "replicas = {} must be at least {MIN_REPLICAS}",
                self.replicas
            )));
        }
        Ok(())
    }

    /// Realizes each replica's field and maps it through `f`.
    pub fn replicate<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&Realization) -> Result<T> + Sync,
    {
        self.check()?;
        replicate(self.replicas, self.root_seed, |_, seed| {
            let r = self.source.realize_with(&self.grid, seed, self.cache.as_ref())?;
            f(&r)
        })
    }

    /// Collects one scalar functional of `(mollified field at eps, xi)` per replica.
    pub fn sample<F>(&self, descriptor: String, xi: f64, eps: f64, f: F) -> Result<SampleSet>
    where
        F: Fn(&crate::lfpp::WeightedGrid) -> Result<f64> + Sync,
    {
        let pairs = self.replicate(|r| {
            let m = r.mollified_with(eps, self.cache.as_ref())?;
            let g = build_weighted_grid(&m, xi)?;
            Ok((f(&g)?, r.seed()))
        })?;
        let (values, seeds) = pairs.into_iter().unzip();
        SampleSet::new(descriptor, values, seeds)
    }

    pub fn sample_crossing(&self, xi: f64, eps: f64) -> Result<SampleSet> {
        self.sample(format!("crossing:eps={eps}:xi={xi}"), xi, eps, |g| {
            crossing_length(g, Square::UNIT)?.expect_finite("unit square crossing")
        })
    }

    pub fn sample_around(&self, xi: f64, eps: f64) -> Result<SampleSet> {
        self.sample(format!("around:r=1..2:eps={eps}:xi={xi}"), xi, eps, |g| {
            around_annulus(g, AnnulusSpec::new(Point::ORIGIN, 1.0, 2.0))?.expect_finite("around annulus")
        })
    }

    pub fn sample_unit_distance(&self, xi: f64, eps: f64) -> Result<SampleSet> {
        self.sample(format!("distance:0..1:eps={eps}:xi={xi}"), xi, eps, |g| {
            distance(g, Point::ORIGIN, Point::new(1.0, 0.0), None)?.expect_finite("D(0, 1)")
        })
    }

    /// Median unit-square crossing length.
    pub fn a_eps(&self, xi: f64, eps: f64) -> Result<QuantileEstimate> {
        self.sample_crossing(xi, eps)?.quantile(0.5)
    }

    /// `p`-quantile of the around-distance of the annulus `1 < |z| < 2`.
    pub fn alpha(&self, xi: f64, p: f64, eps: f64) -> Result<QuantileEstimate> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile level {p} must lie in (0, 1)")));
        }
        self.sample_around(xi, eps)?.quantile(p)
    }

    /// Median of `D(0, (1, 0))`.
    pub fn beta(&self, xi: f64, eps: f64) -> Result<QuantileEstimate> {
        self.sample_unit_distance(xi, eps)?.quantile(0.5)
    }
}

pub fn estimate_a_eps(xi: f64, eps: f64, replicas: usize, root_seed: u64, grid: GridSpec) -> Result<QuantileEstimate> {
    MonteCarlo::new(grid, replicas, root_seed).a_eps(xi, eps)
}

pub fn estimate_alpha(
    xi: f64,
    p: f64,
    replicas: usize,
    root_seed: u64,
    grid: GridSpec,
    eps: f64,
) -> Result<QuantileEstimate> {
    MonteCarlo::new(grid, replicas, root_seed).alpha(xi, p, eps)
}

pub fn estimate_beta(xi: f64, replicas: usize, root_seed: u64, grid: GridSpec, eps: f64) -> Result<QuantileEstimate> {
    MonteCarlo::new(grid, replicas, root_seed).beta(xi, eps)
}
