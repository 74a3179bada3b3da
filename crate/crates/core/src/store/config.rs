//! TOML run configuration.
//!
//! ```toml
//! [run]
//! root_seed = 7
//! replicas = 64
//! p = 0.9
//! out_dir = "lfpp-out"
//!
//! [grid]
//! n = 1024
//! half_width = 1.3333333333333333
//!
//! [estimate]
//! eps_ladder = "2^-3..2^-7"
//! xis = [0.408248]
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimate::GAMMA_PURE_GRAVITY;
use crate::experiments::Param;
use crate::field::FieldSource;
use crate::grid::GridSpec;

pub const DEFAULT_REPLICAS: usize = 64;
pub const DEFAULT_P: f64 = 0.9;
pub const DEFAULT_LADDER: &str = "2^-3..2^-7";
pub const DEFAULT_OUT_DIR: &str = "lfpp-out";
const MAX_REPLICAS: usize = 1_000_000;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    estimate: RawEstimate,
    #[serde(default)]
    params: BTreeMap<String, Param>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    root_seed: Option<u64>,
    replicas: Option<usize>,
    p: Option<f64>,
    out_dir: Option<PathBuf>,
    timing: Option<bool>,
    workers: Option<usize>,
    source: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: Option<usize>,
    half_width: Option<f64>,
    pad_factor: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawLadder {
    Text(String),
    List(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimate {
    eps: Option<f64>,
    eps_ladder: Option<RawLadder>,
    xis: Option<Vec<f64>>,
    gammas: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
    pub pad_factor: usize,
}

impl Default for GridConfig {
    /// `n = 1024` nodes over `[-4/3, 4/3)`: `delta = 1/384`, enough room for the
    /// unit square and a resolved `eps = 2^-7`.
    fn default() -> Self {
        GridConfig {
            n: 1024,
            half_width: 4.0 / 3.0,
            pad_factor: GridSpec::DEFAULT_PAD,
        }
    }
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.half_width, self.pad_factor)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub root_seed: u64,
    pub replicas: usize,
    /// Quantile level of the around-annulus normalizer.
    pub p: f64,
    pub out_dir: PathBuf,
    pub timing: bool,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub source: FieldSource,
    pub grid: GridConfig,
    /// Mollification scale for single-scale runs; `None` means four mesh spacings.
    pub eps: Option<f64>,
    pub eps_ladder: Vec<f64>,
    pub xis: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Extra experiment parameters.
    pub params: BTreeMap<String, Param>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            root_seed: 0,
            replicas: DEFAULT_REPLICAS,
            p: DEFAULT_P,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
            timing: false,
            workers: 0,
            source: FieldSource::Gff,
            grid: GridConfig::default(),
            eps: None,
            eps_ladder: parse_ladder(DEFAULT_LADDER).expect("default ladder parses"),
            xis: vec![GAMMA_PURE_GRAVITY / 4.0],
            gammas: vec![1.0, 1.05, 1.5],
            params: BTreeMap::new(),
        }
    }
}

fn range_error(key: &str, value: impl std::fmt::Display, range: &str) -> Error {
    Error::Config(format!("`{key}` = {value} is out of range (accepted: {range})"))
}

impl RunConfig {
    pub fn grid_spec(&self) -> Result<GridSpec> {
        self.grid.spec()
    }

    /// Mollification scale, defaulting to four mesh spacings.
    pub fn eps_or_default(&self) -> Result<f64> {
        Ok(match self.eps {
            Some(e) => e,
            None => 4.0 * self.grid_spec()?.delta(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_REPLICAS).contains(&self.replicas) {
            return Err(range_error(
                "run.replicas",
                self.replicas,
                &format!("1..={MAX_REPLICAS}"),
            ));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(range_error("run.p", self.p, "0 < p < 1"));
        }
        let g = self.grid;
        if !(g.n >= 2 && g.n.is_power_of_two() && g.n <= 1 << 16) {
            return Err(range_error("grid.n", g.n, "a power of two in 2..=65536"));
        }
        if !(g.half_width.is_finite() && g.half_width > 0.0) {
            return Err(range_error("grid.half_width", g.half_width, "positive and finite"));
        }
        if g.pad_factor < 2 {
            return Err(range_error("grid.pad_factor", g.pad_factor, ">= 2"));
        }
        if let Some(e) = self.eps {
            if !(e.is_finite() && e > 0.0) {
                return Err(range_error("estimate.eps", e, "positive and finite"));
            }
        }
        if self.eps_ladder.iter().any(|e| !(e.is_finite() && *e > 0.0))
            || self.eps_ladder.windows(2).any(|w| !(w[0] > w[1]))
        {
            return Err(range_error(
                "estimate.eps_ladder",
                format!("{:?}", self.eps_ladder),
                "positive, strictly decreasing values",
            ));
        }
        if let Some(x) = self.xis.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(range_error("estimate.xis", x, "positive and finite"));
        }
        if let Some(g) = self
            .gammas
            .iter()
            .find(|g| !(**g > 0.0 && **g <= GAMMA_PURE_GRAVITY * (1.0 + f64::EPSILON)))
        {
            return Err(range_error("estimate.gammas", g, "0 < gamma <= sqrt(8/3)"));
        }
        Ok(())
    }
}

/// Expands `"b^i..b^j"` (integer exponents, unit steps towards `j`) or a
/// comma-separated list of numbers.
pub fn parse_ladder(s: &str) -> Result<Vec<f64>> {
    let bad = || {
        Error::Config(format!(
            "cannot parse ladder `{s}` (expected e.g. \"2^-3..2^-7\" or \"0.125, 0.0625\")"
        ))
    };
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let power = |t: &str| -> Option<(f64, i32)> {
            let (base, exp) = t.trim().split_once('^')?;
            Some((base.trim().parse().ok()?, exp.trim().parse().ok()?))
        };
        let ((b0, e0), (b1, e1)) = (power(a).ok_or_else(bad)?, power(b).ok_or_else(bad)?);
        if b0 != b1 || !(b0 > 0.0) || b0 == 1.0 {
            return Err(bad());
        }
        let step = if e1 >= e0 { 1 } else { -1 };
        let mut out = Vec::new();
        let mut e = e0;
        loop {
            out.push(b0.powi(e));
            if e == e1 {
                break;
            }
            e += step;
        }
        return Ok(out);
    }
    let values: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(values)
}

pub fn config_from_str(text: &str) -> Result<RunConfig> {
    let value: toml::Value = toml::from_str(text).map_err(|e| Error::Config(format!("config syntax: {e}")))?;
    let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let at = if path == "." {
            String::new()
        } else {
            format!("`{path}`: ")
        };
        Error::Config(format!("{at}{}", e.inner()))
    })?;
    let d = RunConfig::default();
    let source = match raw.run.source {
        Some(s) => s.parse()?,
        None => d.source,
    };
    let eps_ladder = match raw.estimate.eps_ladder {
        Some(RawLadder::Text(t)) => parse_ladder(&t)?,
        Some(RawLadder::List(v)) => v,
        None => d.eps_ladder,
    };
    let cfg = RunConfig {
        root_seed: raw.run.root_seed.unwrap_or(d.root_seed),
        replicas: raw.run.replicas.unwrap_or(d.replicas),
        p: raw.run.p.unwrap_or(d.p),
        out_dir: raw.run.out_dir.unwrap_or(d.out_dir),
        timing: raw.run.timing.unwrap_or(d.timing),
        workers: raw.run.workers.unwrap_or(d.workers),
        source,
        grid: GridConfig {
            n: raw.grid.n.unwrap_or(d.grid.n),
            half_width: raw.grid.half_width.unwrap_or(d.grid.half_width),
            pad_factor: raw.grid.pad_factor.unwrap_or(d.grid.pad_factor),
        },
        eps: raw.estimate.eps,
        eps_ladder,
        xis: raw.estimate.xis.unwrap_or(d.xis),
        gammas: raw.estimate.gammas.unwrap_or(d.gammas),
        params: raw.params,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    config_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(config_from_str("").unwrap(), RunConfig::default());
        let d = RunConfig::default();
        assert_eq!(d.p, 0.9);
        assert_eq!(d.replicas, 64);
        assert_eq!(d.grid_spec().unwrap().delta(), 1.0 / 384.0);
    }

    #[test]
    fn ladder_expansion() {
        assert_eq!(
            parse_ladder("2^-3..2^-7").unwrap(),
            vec![0.125, 0.0625, 0.03125, 0.015625, 0.0078125]
        );
        assert_eq!(parse_ladder("2^1..2^3").unwrap(), vec![2.0, 4.0, 8.0]);
        assert_eq!(parse_ladder("0.5, 0.25").unwrap(), vec![0.5, 0.25]);
        assert!(parse_ladder("2^-3..3^-7").is_err());
        assert!(parse_ladder("fast").is_err());
    }

    #[test]
    fn out_of_range_names_key_and_range() {
        let err = config_from_str("[run]\np = 1.5\n").unwrap_err().to_string();
        assert!(err.contains("run.p") && err.contains("0 < p < 1"), "{err}");
        let err = config_from_str("[grid]\nn = 100\n").unwrap_err().to_string();
        assert!(err.contains("grid.n") && err.contains("power of two"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = config_from_str("[run]\nseeed = 3\n").unwrap_err().to_string();
        assert!(err.contains("seeed") && err.contains("run"), "{err}");
        assert!(config_from_str("[plots]\nx = 1\n").is_err());
    }

    #[test]
    fn sections_and_params() {
        let cfg = config_from_str(
            "[run]\nroot_seed = 9\nsource = \"const:0.5\"\n[estimate]\neps_ladder = [0.25, 0.125, 0.0625]\n[params]\nc = 0.7\nradii = [0.1, 0.2]\n",
        )
        .unwrap();
        assert_eq!(cfg.root_seed, 9);
        assert_eq!(cfg.source, FieldSource::Constant { value: 0.5 });
        assert_eq!(cfg.eps_ladder, vec![0.25, 0.125, 0.0625]);
        assert_eq!(cfg.params["c"], Param::Scalar(0.7));
        assert_eq!(cfg.params["radii"], Param::List(vec![0.1, 0.2]));
    }
}
