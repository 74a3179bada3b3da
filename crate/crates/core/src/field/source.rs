use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{mollify, sample_field, Field, FieldKind};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::store::FieldCache;

/// Where replica fields come from.
///
/// Everything except `Gff` is a deterministic hook that bypasses sampling and
/// hands back an already "mollified" synthetic field; reports flag these runs
/// as synthetic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSource {
    Gff,
    Zero,
    Constant {
        value: f64,
    },
    /// Constant `kappa * ln(1/eps)` at scale `eps`, so crossing lengths scale as `eps^(-xi kappa)`.
    EpsScaling {
        kappa: f64,
    },
    /// `kappa * ln(1 / max(|x|, delta))`, so annulus crossings scale as `r^(1 - xi kappa)`.
    LogRadial {
        kappa: f64,
    },
}

impl FieldSource {
    pub fn is_synthetic(&self) -> bool {
        !matches!(self, FieldSource::Gff)
    }

    pub fn realize(&self, spec: &GridSpec, seed: u64) -> Result<Realization> {
        self.realize_with(spec, seed, None)
    }

    /// Like [`realize`](Self::realize), reading and filling `cache` for sampled fields.
    pub fn realize_with(&self, spec: &GridSpec, seed: u64, cache: Option<&FieldCache>) -> Result<Realization> {
        let raw = match self {
            FieldSource::Gff => Some(match cache {
                Some(c) => c.get_or_insert(spec, seed, FieldKind::Raw, || sample_field(spec, seed))?,
                None => sample_field(spec, seed)?,
            }),
            _ => None,
        };
        Ok(Realization {
            source: *self,
            spec: *spec,
            seed,
            raw,
        })
    }
}

impl fmt::Display for FieldSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSource::Gff => write!(f, "gff"),
            FieldSource::Zero => write!(f, "zero"),
            FieldSource::Constant { value } => write!(f, "const:{value}"),
            FieldSource::EpsScaling { kappa } => write!(f, "eps-scaling:{kappa}"),
            FieldSource::LogRadial { kappa } => write!(f, "log-radial:{kappa}"),
        }
    }
}

impl FromStr for FieldSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let number = |a: Option<&str>| -> Result<f64> {
            a.and_then(|a| a.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Config(format!("field source `{s}` needs a finite numeric argument")))
        };
        match name {
            "gff" if arg.is_none() => Ok(FieldSource::Gff),
            "zero" if arg.is_none() => Ok(FieldSource::Zero),
            "const" => Ok(FieldSource::Constant { value: number(arg)? }),
            "eps-scaling" => Ok(FieldSource::EpsScaling { kappa: number(arg)? }),
            "log-radial" => Ok(FieldSource::LogRadial { kappa: number(arg)? }),
            _ => Err(Error::Config(format!(
                "unknown field source `{s}` (expected gff, zero, const:C, eps-scaling:K or log-radial:K)"
            ))),
        }
    }
}

/// One replica's field, ready to be mollified at any scale.
#[derive(Clone, Debug)]
pub struct Realization {
    source: FieldSource,
    spec: GridSpec,
    seed: u64,
    raw: Option<Field>,
}

impl Realization {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn raw(&self) -> Option<&Field> {
        self.raw.as_ref()
    }

    pub fn mollified(&self, eps: f64) -> Result<Field> {
        self.mollified_with(eps, None)
    }

    pub fn mollified_with(&self, eps: f64, cache: Option<&FieldCache>) -> Result<Field> {
        let spec = self.spec;
        let synthetic = |field: Field| Ok(field.into_synthetic_mollified(eps, self.seed));
        match self.source {
            FieldSource::Gff => {
                let raw = self.raw.as_ref().expect("sampled realization keeps its raw field");
                match cache {
                    Some(c) => c.get_or_insert(&spec, self.seed, FieldKind::Mollified { eps }, || mollify(raw, eps)),
                    None => mollify(raw, eps),
                }
            }
            FieldSource::Zero => synthetic(Field::zero(spec)),
            FieldSource::Constant { value } => synthetic(Field::constant(spec, value)),
            FieldSource::EpsScaling { kappa } => {
                if !(eps > 0.0) {
                    return Err(Error::Data(format!("eps = {eps} must be positive")));
                }
                synthetic(Field::constant(spec, kappa * (1.0 / eps).ln()))
            }
            FieldSource::LogRadial { kappa } => {
                let floor = spec.delta();
                synthetic(Field::from_fn(spec, |p| {
                    kappa * (1.0 / p.dist(crate::grid::Point::ORIGIN).max(floor)).ln()
                })?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["gff", "zero", "const:0.7", "eps-scaling:0.25", "log-radial:-1.5"] {
            let src: FieldSource = s.parse().unwrap();
            assert_eq!(src.to_string(), s);
        }
        assert!("const".parse::<FieldSource>().is_err());
        assert!("gff:1".parse::<FieldSource>().is_err());
        assert!("white-noise".parse::<FieldSource>().is_err());
    }

    #[test]
    fn hooks_produce_synthetic_mollified_fields() {
        let spec = GridSpec::new(16, 1.0, 2).unwrap();
        let r = FieldSource::Constant { value: 0.5 }.realize(&spec, 11).unwrap();
        let f = r.mollified(0.25).unwrap();
        assert_eq!(f.kind(), FieldKind::Mollified { eps: 0.25 });
        assert_eq!(f.seed(), 11);
        assert!(f.values().iter().all(|&v| v == 0.5));
        let e = FieldSource::EpsScaling { kappa: 2.0 }.realize(&spec, 0).unwrap();
        let v = e.mollified(0.125).unwrap().values()[0];
        assert!((v - 2.0 * 8.0f64.ln()).abs() < 1e-15);
    }
}
