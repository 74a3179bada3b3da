//! Reports as pretty-printed JSON: one key per line, maps in sorted key order,
//! floats in shortest round-trip form.

use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::experiments::Report;

pub fn report_to_string(report: &Report) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Data(format!("report serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn report_from_str(s: &str) -> Result<Report> {
    let de = &mut serde_json::Deserializer::from_str(s);
    let report: Report = serde_path_to_error::deserialize(de).map_err(|e| FormatError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    Ok(report)
}

pub fn write_report(report: &Report, path: impl AsRef<Path>) -> Result<()> {
    super::write_atomic(path.as_ref(), report_to_string(report)?.as_bytes())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Report> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    report_from_str(&text)
}
