use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::Report;

/// A header row plus string cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Data(format!("csv: {e}"));
        w.write_record(&self.header).map_err(err)?;
        for row in &self.rows {
            w.write_record(row).map_err(err)?;
        }
        w.into_inner().map_err(|e| Error::Data(format!("csv: {e}")))
    }

    /// One row per replica record: `arm, replica, seed`, then every value column
    /// (sorted, headed `name (unit)`).
    pub fn from_report(report: &Report) -> Self {
        let columns: BTreeSet<&String> = report.per_replica.iter().flat_map(|r| r.values.keys()).collect();
        let mut header = vec!["arm".to_string(), "replica".to_string(), "seed".to_string()];
        header.extend(columns.iter().map(|c| match report.units.get(*c) {
            Some(u) => format!("{c} ({u})"),
            None => c.to_string(),
        }));
        let rows = report
            .per_replica
            .iter()
            .map(|r| {
                let mut row = vec![r.arm.clone(), r.replica.to_string(), r.seed.to_string()];
                row.extend(
                    columns
                        .iter()
                        .map(|c| r.values.get(*c).map(|v| v.to_string()).unwrap_or_default()),
                );
                row
            })
            .collect();
        CsvTable { header, rows }
    }
}

pub fn write_csv(table: &CsvTable, path: impl AsRef<Path>) -> Result<()> {
    super::write_atomic(path.as_ref(), &table.to_bytes()?)
}

pub fn write_report_csv(report: &Report, path: impl AsRef<Path>) -> Result<()> {
    write_csv(&CsvTable::from_report(report), path)
}
