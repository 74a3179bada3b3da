//! Binary field cache files.
//!
//! Layout (all little-endian, no padding):
//!
//! | offset | size | field        |
//! |-------:|-----:|--------------|
//! | 0      | 8    | magic `LFPPFLD1` |
//! | 8      | 4    | version (u32, = 1) |
//! | 12     | 4    | n (u32) |
//! | 16     | 8    | half width (f64) |
//! | 24     | 4    | pad factor (u32) |
//! | 28     | 8    | seed (u64) |
//! | 36     | 1    | kind tag (0 raw, 1 mollified) |
//! | 37     | 8    | eps (f64, 0 if raw) |
//! | 45     | 8    | calibration (f64) |
//! | 53     | 8 n^2| values, row-major f64 |

use std::path::{Path, PathBuf};

use crate::error::{Error, FormatError, Result};
use crate::field::{Field, FieldKind, Origin};
use crate::grid::GridSpec;

pub const FIELD_MAGIC: [u8; 8] = *b"LFPPFLD1";
pub const FIELD_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 53;
/// Overrides the cache root directory.
pub const CACHE_DIR_ENV: &str = "LFPP_CACHE_DIR";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldCacheHeader {
    pub version: u32,
    pub n: u32,
    pub half_width: f64,
    pub pad_factor: u32,
    pub seed: u64,
    pub kind_tag: u8,
    pub eps: f64,
    pub calibration: f64,
}

impl FieldCacheHeader {
    pub fn of(field: &Field) -> Self {
        let spec = field.spec();
        let (kind_tag, eps) = match field.kind() {
            FieldKind::Raw => (0, 0.0),
            FieldKind::Mollified { eps } => (1, eps),
        };
        FieldCacheHeader {
            version: FIELD_VERSION,
            n: spec.n() as u32,
            half_width: spec.half_width(),
            pad_factor: spec.pad_factor() as u32,
            seed: field.seed(),
            kind_tag,
            eps,
            calibration: field.calibration(),
        }
    }

    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..8].copy_from_slice(&FIELD_MAGIC);
        out[8..12].copy_from_slice(&self.version.to_le_bytes());
        out[12..16].copy_from_slice(&self.n.to_le_bytes());
        out[16..24].copy_from_slice(&self.half_width.to_le_bytes());
        out[24..28].copy_from_slice(&self.pad_factor.to_le_bytes());
        out[28..36].copy_from_slice(&self.seed.to_le_bytes());
        out[36] = self.kind_tag;
        out[37..45].copy_from_slice(&self.eps.to_le_bytes());
        out[45..53].copy_from_slice(&self.calibration.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        if bytes.len() < HEADER_LEN {
            return Err(FormatError::Length {
                expected: HEADER_LEN as u64,
                actual: bytes.len() as u64,
            });
        }
        let magic: [u8; 8] = bytes[0..8].try_into().unwrap();
        if magic != FIELD_MAGIC {
            return Err(FormatError::MagicMismatch { found: magic });
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != FIELD_VERSION {
            return Err(FormatError::VersionMismatch {
                found: version,
                expected: FIELD_VERSION,
            });
        }
        let header = FieldCacheHeader {
            version,
            n: u32_at(12),
            half_width: f64_at(16),
            pad_factor: u32_at(24),
            seed: u64::from_le_bytes(bytes[28..36].try_into().unwrap()),
            kind_tag: bytes[36],
            eps: f64_at(37),
            calibration: f64_at(45),
        };
        if header.kind_tag > 1 {
            return Err(FormatError::Header(format!("unknown kind tag {}", header.kind_tag)));
        }
        Ok(header)
    }

    pub fn payload_len(&self) -> u64 {
        8 * self.n as u64 * self.n as u64
    }
}

pub fn encode_field(field: &Field) -> Vec<u8> {
    let header = FieldCacheHeader::of(field);
    let mut out = Vec::with_capacity(HEADER_LEN + header.payload_len() as usize);
    out.extend_from_slice(&header.encode());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<Field> {
    let header = FieldCacheHeader::decode(bytes)?;
    let expected = HEADER_LEN as u64 + header.payload_len();
    if bytes.len() as u64 != expected {
        return Err(FormatError::Length {
            expected,
            actual: bytes.len() as u64,
        }
        .into());
    }
    let spec = GridSpec::new(header.n as usize, header.half_width, header.pad_factor as usize)
        .map_err(|e| FormatError::Header(e.to_string()))?;
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let kind = match header.kind_tag {
        0 => FieldKind::Raw,
        _ => FieldKind::Mollified { eps: header.eps },
    };
    Field::from_parts(spec, values, header.seed, kind, Origin::Sampled, header.calibration)
}

/// Writes `field` atomically (temp file + rename).
pub fn save_field(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    super::write_atomic(path.as_ref(), &encode_field(field))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<Field> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_field(&bytes)
}

/// Directory of cached fields keyed on `(spec, seed, kind, eps)`.
#[derive(Clone, Debug)]
pub struct FieldCache {
    root: PathBuf,
}

impl FieldCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FieldCache { root: root.into() }
    }

    /// Uses `$LFPP_CACHE_DIR` when set, otherwise `default_root`.
    pub fn from_env(default_root: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::new(dir),
            _ => Self::new(default_root),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, spec: &GridSpec, seed: u64, kind: FieldKind) -> PathBuf {
        let kind = match kind {
            FieldKind::Raw => "raw".to_string(),
            FieldKind::Mollified { eps } => format!("eps{:016x}", eps.to_bits()),
        };
        self.root.join(format!(
            "n{}_L{:016x}_p{}_s{:016x}_{kind}.fld",
            spec.n(),
            spec.half_width().to_bits(),
            spec.pad_factor(),
            seed
        ))
    }

    pub fn get_or_insert(
        &self,
        spec: &GridSpec,
        seed: u64,
        kind: FieldKind,
        compute: impl FnOnce() -> Result<Field>,
    ) -> Result<Field> {
        let path = self.path_for(spec, seed, kind);
        if let Ok(field) = load_field(&path) {
            if field.spec() == spec && field.seed() == seed && field.kind() == kind {
                return Ok(field);
            }
        }
        let field = compute()?;
        save_field(&field, &path)?;
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample_field;

    fn sample() -> Field {
        sample_field(&GridSpec::new(64, 2.0, 2).unwrap(), 21).unwrap()
    }

    #[test]
    fn header_is_53_bytes_little_endian() {
        let f = sample();
        let bytes = encode_field(&f);
        assert_eq!(bytes.len(), HEADER_LEN + 64 * 64 * 8);
        assert_eq!(&bytes[0..8], b"LFPPFLD1");
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[64, 0, 0, 0]);
        assert_eq!(&bytes[16..24], &2.0f64.to_le_bytes());
        assert_eq!(&bytes[24..28], &[2, 0, 0, 0]);
        assert_eq!(&bytes[28..36], &21u64.to_le_bytes());
        assert_eq!(bytes[36], 0);
        assert_eq!(&bytes[37..45], &0.0f64.to_le_bytes());
        assert_eq!(&bytes[45..53], &f.calibration().to_le_bytes());
        assert_eq!(&bytes[53..61], &f.values()[0].to_le_bytes());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let f = sample();
        let m = crate::field::mollify(&f, 0.25).unwrap();
        for field in [&f, &m] {
            let path = dir.path().join("f.fld");
            save_field(field, &path).unwrap();
            let back = load_field(&path).unwrap();
            assert_eq!(back.kind(), field.kind());
            assert_eq!(back.seed(), field.seed());
            assert_eq!(back.spec(), field.spec());
            assert_eq!(back.calibration().to_bits(), field.calibration().to_bits());
            assert!(back
                .values()
                .iter()
                .zip(field.values())
                .all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn corrupt_files_give_distinct_errors() {
        let bytes = encode_field(&sample());

        let mut bad_magic = bytes.clone();
        bad_magic[3] = b'X';
        assert!(matches!(
            decode_field(&bad_magic),
            Err(Error::Format(FormatError::MagicMismatch { .. }))
        ));

        let mut bad_version = bytes.clone();
        bad_version[8] = 2;
        assert!(matches!(
            decode_field(&bad_version),
            Err(Error::Format(FormatError::VersionMismatch { found: 2, .. }))
        ));

        let truncated = &bytes[..bytes.len() - 5];
        match decode_field(truncated) {
            Err(Error::Format(FormatError::Length { expected, actual })) => {
                assert_eq!(expected, bytes.len() as u64);
                assert_eq!(actual, bytes.len() as u64 - 5);
                let msg = FormatError::Length { expected, actual }.to_string();
                assert!(msg.contains(&expected.to_string()) && msg.contains(&actual.to_string()));
            }
            other => panic!("expected length error, got {other:?}"),
        }

        assert!(matches!(
            decode_field(&bytes[..20]),
            Err(Error::Format(FormatError::Length {
                expected: 53,
                actual: 20
            }))
        ));
    }

    #[test]
    fn cache_reuses_stored_fields() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FieldCache::new(dir.path());
        let spec = GridSpec::new(64, 2.0, 2).unwrap();
        let first = cache
            .get_or_insert(&spec, 5, FieldKind::Raw, || sample_field(&spec, 5))
            .unwrap();
        let second = cache
            .get_or_insert(&spec, 5, FieldKind::Raw, || panic!("should hit the cache"))
            .unwrap();
        assert_eq!(first.values(), second.values());
        assert!(cache.path_for(&spec, 5, FieldKind::Raw).exists());
    }
}
