//! Report and CSV files written by the query verbs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lfpp_core::experiments::{Outcome, Verdict};
use lfpp_core::store::{write_csv, CsvTable};
use lfpp_core::{FieldSource, GridSpec};
use serde::{Deserialize, Serialize};

/// Report of a non-experiment verb (queries, estimates, fixtures, samples).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryReport {
    pub verb: String,
    /// Human-readable description of the query.
    pub query: String,
    pub grid: GridSpec,
    /// `None` for oracle fixtures.
    pub source: Option<FieldSource>,
    pub root_seed: u64,
    pub replicas: usize,
    pub xi: Option<f64>,
    pub eps: Option<f64>,
    pub summary: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub notes: Vec<String>,
}

impl QueryReport {
    pub fn outcome(&self) -> Outcome {
        self.verdicts.values().map(|v| v.outcome).max().unwrap_or(Outcome::Pass)
    }
}

pub(crate) fn out_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.report.json")))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub(crate) fn write_query(dir: &Path, stem: &str, table: &CsvTable, report: &QueryReport) -> Result<()> {
    ensure_dir(dir)?;
    let (csv, json) = out_paths(dir, stem);
    write_csv(table, &csv)?;
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&json, text).with_context(|| format!("writing {}", json.display()))?;
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

pub(crate) fn print_summary(summary: &BTreeMap<String, f64>) {
    for (k, v) in summary {
        println!("  {k} = {v}");
    }
}

pub(crate) fn print_verdicts(verdicts: &BTreeMap<String, Verdict>) {
    for (name, v) in verdicts {
        println!("verdict {name}: {} ({})", v.outcome, v.detail);
    }
}
