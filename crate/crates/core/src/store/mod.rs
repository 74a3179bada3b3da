//! Persistence: field cache files, reports, configuration and seed derivation.

mod cache;
mod config;
mod csv_out;
mod report_io;
mod seed;

pub use cache::{decode_field, encode_field};
pub use cache::{
    load_field, save_field, FieldCache, FieldCacheHeader, CACHE_DIR_ENV, FIELD_MAGIC, FIELD_VERSION, HEADER_LEN,
};
pub use config::{
    config_from_str, parse_ladder, read_config, GridConfig, RunConfig, DEFAULT_LADDER, DEFAULT_P, DEFAULT_REPLICAS,
};
pub use csv_out::{write_csv, write_report_csv, CsvTable};
pub use report_io::{read_report, report_from_str, report_to_string, write_report};
pub use seed::derive_seed;

use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;

    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut file = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
