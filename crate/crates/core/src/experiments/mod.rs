//! Scenario runners producing structured [`Report`]s.

mod continuity;
mod euclidean;
mod exponent;
mod invariance;
mod scaling;
mod weyl;
mod xi_infty;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{MonteCarlo, MIN_REPLICAS};
use crate::field::FieldSource;
use crate::grid::GridSpec;
use crate::store::FieldCache;

pub use continuity::run_continuity;
pub use euclidean::{pair_battery, run_euclidean_limit};
pub use exponent::{run_exponent_scan, PURE_GRAVITY_SLOPE, XI_PURE_GRAVITY};
pub use invariance::run_invariance_check;
pub use scaling::run_annulus_scaling;
pub use weyl::run_weyl_check;
pub use xi_infty::run_xi_infty;

/// Caveat attached to every report.
pub const TOPOLOGY_NOTE: &str = "discrete metrics: the local uniform and lower semicontinuous \
topologies coincide on a finite grid, so statistics here are proxies for continuum statements";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Continuity,
    EuclideanLimit,
    ExponentScan,
    XiInfty,
    AnnulusScaling,
    WeylCheck,
    InvarianceCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Continuity,
        ExperimentKind::EuclideanLimit,
        ExperimentKind::ExponentScan,
        ExperimentKind::XiInfty,
        ExperimentKind::AnnulusScaling,
        ExperimentKind::WeylCheck,
        ExperimentKind::InvarianceCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Continuity => "continuity",
            ExperimentKind::EuclideanLimit => "euclidean_limit",
            ExperimentKind::ExponentScan => "exponent_scan",
            ExperimentKind::XiInfty => "xi_infty",
            ExperimentKind::AnnulusScaling => "annulus_scaling",
            ExperimentKind::WeylCheck => "weyl_check",
            ExperimentKind::InvarianceCheck => "invariance_check",
        }
    }

    /// Whether verdicts rest on replica statistics.
    pub fn is_statistical(self) -> bool {
        !matches!(self, ExperimentKind::WeylCheck)
    }

    /// `(required, optional)` parameter names.
    pub fn parameters(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            ExperimentKind::Continuity => (&["gammas"], &["eps"]),
            ExperimentKind::EuclideanLimit => (&["gammas"], &["eps"]),
            ExperimentKind::ExponentScan => (&["xis", "eps_ladder"], &["target_xi", "tolerance"]),
            ExperimentKind::XiInfty => (&["xis"], &["p", "eps"]),
            ExperimentKind::AnnulusScaling => (&["xi", "radii"], &["eps", "eps_ladder", "target", "tolerance"]),
            ExperimentKind::WeylCheck => (&["xi"], &["c", "bump", "queries", "eps"]),
            ExperimentKind::InvarianceCheck => (&["xi"], &["r1", "r2", "shift", "eps"]),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!(
                "unknown experiment `{s}` (expected one of {})",
                names.join(", ")
            ))
        })
    }
}

/// A scalar or list parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub parameters: BTreeMap<String, Param>,
    pub root_seed: u64,
    pub grid: GridSpec,
    pub replicas: usize,
    #[serde(default = "default_source")]
    pub source: FieldSource,
    /// Record wall-clock time in the report (breaks byte-for-byte reproducibility).
    #[serde(default)]
    pub timing: bool,
}

fn default_source() -> FieldSource {
    FieldSource::Gff
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, grid: GridSpec, replicas: usize, root_seed: u64) -> Self {
        ExperimentSpec {
            kind,
            parameters: BTreeMap::new(),
            root_seed,
            grid,
            replicas,
            source: FieldSource::Gff,
            timing: false,
        }
    }

    pub fn with_scalar(mut self, key: &str, v: f64) -> Self {
        self.parameters.insert(key.into(), Param::Scalar(v));
        self
    }

    pub fn with_list(mut self, key: &str, v: &[f64]) -> Self {
        self.parameters.insert(key.into(), Param::List(v.to_vec()));
        self
    }

    pub fn with_source(mut self, source: FieldSource) -> Self {
        self.source = source;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (required, optional) = self.kind.parameters();
        for key in self.parameters.keys() {
            if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "{}: unknown parameter `{key}` (accepted: {})",
                    self.kind,
                    required.iter().chain(optional).copied().collect::<Vec<_>>().join(", ")
                )));
            }
        }
        for key in required {
            if !self.parameters.contains_key(*key) {
                return Err(Error::Config(format!("{}: missing parameter `{key}`", self.kind)));
            }
        }
        for (key, p) in &self.parameters {
            let bad = match p {
                Param::Scalar(v) => !v.is_finite(),
                Param::List(v) => v.is_empty() || v.iter().any(|x| !x.is_finite()),
            };
            if bad {
                return Err(Error::Config(format!(
                    "{}: parameter `{key}` must be finite (and nonempty if a list)",
                    self.kind
                )));
            }
        }
        let min = if self.kind.is_statistical() { MIN_REPLICAS } else { 1 };
        if self.replicas < min {
            return Err(Error::Config(format!(
                "{}: replicas = {} must be at least {min}",
                self.kind, self.replicas
            )));
        }
        Ok(())
    }

    pub fn scalar(&self, key: &str) -> Result<Option<f64>> {
        match self.parameters.get(key) {
            None => Ok(None),
            Some(Param::Scalar(v)) => Ok(Some(*v)),
            Some(Param::List(_)) => Err(Error::Config(format!(
                "{}: parameter `{key}` must be a scalar",
                self.kind
            ))),
        }
    }

    pub fn scalar_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.scalar(key)?.unwrap_or(default))
    }

    pub fn require_scalar(&self, key: &str) -> Result<f64> {
        self.scalar(key)?
            .ok_or_else(|| Error::Config(format!("{}: missing parameter `{key}`", self.kind)))
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.parameters.get(key) {
            None => Ok(None),
            Some(Param::List(v)) => Ok(Some(v.clone())),
            Some(Param::Scalar(v)) => Ok(Some(vec![*v])),
        }
    }

    pub fn require_list(&self, key: &str) -> Result<Vec<f64>> {
        self.list(key)?
            .ok_or_else(|| Error::Config(format!("{}: missing parameter `{key}`", self.kind)))
    }

    /// Mollification scale: parameter `eps`, else four mesh spacings.
    pub fn eps(&self) -> Result<f64> {
        self.scalar_or("eps", 4.0 * self.grid.delta())
    }

    pub(crate) fn monte_carlo(&self, cache: Option<&FieldCache>) -> MonteCarlo {
        MonteCarlo::new(self.grid, self.replicas, self.root_seed)
            .with_source(self.source)
            .with_cache(cache.cloned())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    StatisticalWarn,
    Fail,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "pass",
            Outcome::StatisticalWarn => "statistical-warn",
            Outcome::Fail => "fail",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verdict {
    pub outcome: Outcome,
    /// Summary key this verdict is decided on.
    pub metric: String,
    pub detail: String,
    pub statistical: bool,
    pub sample_size: Option<usize>,
    pub significance: Option<f64>,
}

impl Verdict {
    /// Exact check: pass or fail.
    pub fn hard(pass: bool, metric: &str, detail: impl Into<String>) -> Self {
        Verdict {
            outcome: if pass { Outcome::Pass } else { Outcome::Fail },
            metric: metric.into(),
            detail: detail.into(),
            statistical: false,
            sample_size: None,
            significance: None,
        }
    }

    /// Statistical check: a miss is a warning, never a failure.
    pub fn statistical(
        pass: bool,
        metric: &str,
        detail: impl Into<String>,
        sample_size: usize,
        significance: Option<f64>,
    ) -> Self {
        Verdict {
            outcome: if pass { Outcome::Pass } else { Outcome::StatisticalWarn },
            metric: metric.into(),
            detail: detail.into(),
            statistical: true,
            sample_size: Some(sample_size),
            significance,
        }
    }

    /// Escalates a statistical verdict to a hard failure.
    pub fn escalate(mut self, detail: impl Into<String>) -> Self {
        self.outcome = Outcome::Fail;
        self.detail = detail.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub arm: String,
    pub replica: usize,
    pub seed: u64,
    pub values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub spec: ExperimentSpec,
    pub synthetic: bool,
    pub per_replica: Vec<Record>,
    /// Units of the per-replica value columns.
    pub units: BTreeMap<String, String>,
    pub summary: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub wall_time: f64,
    pub notes: Vec<String>,
}

impl Report {
    /// Worst verdict outcome (`Pass` when there are none).
    pub fn outcome(&self) -> Outcome {
        self.verdicts.values().map(|v| v.outcome).max().unwrap_or(Outcome::Pass)
    }

    pub fn failing(&self) -> impl Iterator<Item = (&String, &Verdict)> {
        self.verdicts.iter().filter(|(_, v)| v.outcome != Outcome::Pass)
    }

    /// Checks that verdicts reference summary metrics and that every number is finite.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in &self.verdicts {
            if !self.summary.contains_key(&v.metric) {
                return Err(Error::Data(format!(
                    "verdict `{name}` references missing metric `{}`",
                    v.metric
                )));
            }
        }
        let finite = self
            .summary
            .iter()
            .chain(self.per_replica.iter().flat_map(|r| &r.values));
        for (k, v) in finite {
            if !v.is_finite() {
                return Err(Error::Data(format!("report value `{k}` is not finite")));
            }
        }
        Ok(())
    }
}

/// Accumulates a report while a runner executes.
pub(crate) struct ReportBuilder {
    records: Vec<Record>,
    units: BTreeMap<String, String>,
    summary: BTreeMap<String, f64>,
    verdicts: BTreeMap<String, Verdict>,
    notes: Vec<String>,
}

impl ReportBuilder {
    pub fn new() -> Self {
        ReportBuilder {
            records: Vec::new(),
            units: BTreeMap::new(),
            summary: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            notes: vec![TOPOLOGY_NOTE.to_string()],
        }
    }

    pub fn unit(&mut self, column: &str, unit: &str) {
        self.units.insert(column.into(), unit.into());
    }

    pub fn record(&mut self, arm: impl Into<String>, replica: usize, seed: u64, values: &[(&str, f64)]) {
        self.records.push(Record {
            arm: arm.into(),
            replica,
            seed,
            values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        });
    }

    pub fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.summary.insert(key.into(), value);
    }

    pub fn verdict(&mut self, name: &str, v: Verdict) {
        self.verdicts.insert(name.into(), v);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn finish(self, spec: &ExperimentSpec, started: Instant) -> Result<Report> {
        let report = Report {
            spec: spec.clone(),
            synthetic: spec.source.is_synthetic(),
            per_replica: self.records,
            units: self.units,
            summary: self.summary,
            verdicts: self.verdicts,
            wall_time: if spec.timing {
                started.elapsed().as_secs_f64()
            } else {
                0.0
            },
            notes: self.notes,
        };
        report.validate()?;
        Ok(report)
    }
}

/// Compact label for a parameter value in metric keys.
pub(crate) fn label(prefix: &str, v: f64) -> String {
    format!("{prefix}={v}")
}

/// Runs the experiment described by `spec`.
pub fn run(spec: &ExperimentSpec) -> Result<Report> {
    run_with(spec, None)
}

/// Like [`run`], reading and filling a field cache.
pub fn run_with(spec: &ExperimentSpec, cache: Option<&FieldCache>) -> Result<Report> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::Continuity => continuity::run(spec, cache),
        ExperimentKind::EuclideanLimit => euclidean::run(spec, cache),
        ExperimentKind::ExponentScan => exponent::run(spec, cache),
        ExperimentKind::XiInfty => xi_infty::run(spec, cache),
        ExperimentKind::AnnulusScaling => scaling::run(spec, cache),
        ExperimentKind::WeylCheck => weyl::run(spec, cache),
        ExperimentKind::InvarianceCheck => invariance::run(spec, cache),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("magic".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn spec_validation() {
        let grid = GridSpec::new(64, 2.0, 2).unwrap();
        let s = ExperimentSpec::new(ExperimentKind::Continuity, grid, 16, 0);
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let s = s.with_list("gammas", &[1.0, 1.1, 1.5]);
        assert!(s.validate().is_ok());
        assert!(s.clone().with_scalar("bogus", 1.0).validate().is_err());
        let mut few = s.clone();
        few.replicas = 4;
        assert!(few.validate().is_err());
    }

    #[test]
    fn outcome_is_worst_verdict() {
        let grid = GridSpec::new(64, 2.0, 2).unwrap();
        let spec = ExperimentSpec::new(ExperimentKind::WeylCheck, grid, 1, 0).with_scalar("xi", 1.0);
        let mut b = ReportBuilder::new();
        b.metric("m", 1.0);
        b.verdict("a", Verdict::hard(true, "m", ""));
        b.verdict("b", Verdict::statistical(false, "m", "", 16, Some(0.05)));
        let r = b.finish(&spec, Instant::now()).unwrap();
        assert_eq!(r.outcome(), Outcome::StatisticalWarn);
        assert_eq!(r.wall_time, 0.0);

        let mut b = ReportBuilder::new();
        b.verdict("x", Verdict::hard(true, "missing", ""));
        assert!(b.finish(&spec, Instant::now()).is_err());
    }
}
