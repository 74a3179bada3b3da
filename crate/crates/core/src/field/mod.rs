//! Discrete whole-plane Gaussian free field approximations.
//!
//! Fields are sampled by spectral synthesis on a padded torus, windowed to the
//! working grid and shifted so the circle average at radius 1 about the origin
//! vanishes. [`mollify`] convolves a raw field with the heat kernel at time
//! `eps^2 / 2`; [`circle_average`] reads off circle averages by bilinear
//! interpolation.

mod kernel;
mod source;
mod spectral;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Node, Point};

pub use kernel::{make_kernel, mollify, Kernel};
pub use source::{FieldSource, Realization};
pub use spectral::{calibration, sample_field, unit_circle_variance_model};

/// Tolerance below which a field counts as normalized (`h_1(0) = 0`).
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FieldKind {
    Raw,
    Mollified { eps: f64 },
}

impl FieldKind {
    pub fn eps(&self) -> Option<f64> {
        match *self {
            FieldKind::Raw => None,
            FieldKind::Mollified { eps } => Some(eps),
        }
    }
}

/// Where a field's values came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    Sampled,
    Synthetic,
    /// A sampled or synthetic field with a deterministic function added.
    Augmented,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    spec: GridSpec,
    values: Vec<f64>,
    seed: u64,
    kind: FieldKind,
    normalized: bool,
    origin: Origin,
    calibration: f64,
}

impl Field {
    /// Synthetic raw field from explicit row-major values.
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Data(format!(
                "expected {} values for a {n}x{n} grid, got {}",
                spec.len(),
                values.len(),
                n = spec.n()
            )));
        }
        check_finite(&spec, &values)?;
        let mut field = Field {
            spec,
            values,
            seed: 0,
            kind: FieldKind::Raw,
            normalized: false,
            origin: Origin::Synthetic,
            calibration: 1.0,
        };
        field.normalized = field.measure_normalized();
        Ok(field)
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(Point) -> f64) -> Result<Self> {
        let values = (0..spec.len()).map(|i| f(spec.point_of_index(i))).collect();
        Self::from_values(spec, values)
    }

    pub fn zero(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self::from_values(spec, vec![c; spec.len()]).expect("constant field is finite")
    }

    /// Reassemble a field from stored parts; used by the cache reader.
    pub(crate) fn from_parts(
        spec: GridSpec,
        values: Vec<f64>,
        seed: u64,
        kind: FieldKind,
        origin: Origin,
        calibration: f64,
    ) -> Result<Self> {
        check_finite(&spec, &values)?;
        let mut field = Field {
            spec,
            values,
            seed,
            kind,
            normalized: false,
            origin,
            calibration,
        };
        field.normalized = field.measure_normalized();
        Ok(field)
    }

    /// Relabel a synthetic field as a mollified one with the given provenance.
    /// Used by test hooks that stand in for `mollify(sample_field(..))`.
    pub fn into_synthetic_mollified(mut self, eps: f64, seed: u64) -> Self {
        self.kind = FieldKind::Mollified { eps };
        self.seed = seed;
        self.origin = Origin::Synthetic;
        self
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, node: Node) -> f64 {
        self.values[self.spec.index(node)]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    /// Spectral amplitude scale applied when sampling (1 for synthetic fields).
    pub fn calibration(&self) -> f64 {
        self.calibration
    }

    /// Bilinear interpolation at a point; caller guarantees the point is inside the node hull.
    fn interpolate(&self, p: Point) -> f64 {
        bilinear(&self.spec, p)
            .into_iter()
            .map(|(node, w)| w * self.value(node))
            .sum()
    }

    fn measure_normalized(&self) -> bool {
        match circle_average(self, Point::ORIGIN, 1.0) {
            Ok(avg) => avg.abs() <= NORMALIZATION_TOL,
            Err(_) => false,
        }
    }
}

fn check_finite(spec: &GridSpec, values: &[f64]) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        let node = spec.node(i);
        return Err(Error::Data(format!(
            "non-finite field value {} at node ({}, {})",
            values[i], node.ix, node.iy
        )));
    }
    Ok(())
}

/// The four bilinear stencil entries for `p`. Weights sum to one.
fn bilinear(spec: &GridSpec, p: Point) -> [(Node, f64); 4] {
    let (fx, fy) = spec.lattice_coords(p);
    let max = spec.n() - 2;
    let ix = (fx.floor().max(0.0) as usize).min(max);
    let iy = (fy.floor().max(0.0) as usize).min(max);
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    [
        (Node::new(ix, iy), (1.0 - tx) * (1.0 - ty)),
        (Node::new(ix + 1, iy), tx * (1.0 - ty)),
        (Node::new(ix, iy + 1), (1.0 - tx) * ty),
        (Node::new(ix + 1, iy + 1), tx * ty),
    ]
}

/// Number of quadrature points used on a circle of radius `r`.
pub fn circle_points(radius: f64, delta: f64) -> usize {
    ((TAU * radius / delta).ceil() as usize).max(64)
}

/// Linear stencil for the circle average: `h_r(z) = sum_i w_i * h(node_i)`.
pub(crate) fn circle_stencil(spec: &GridSpec, center: Point, radius: f64) -> Result<Vec<(Node, f64)>> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Geometry(format!("circle radius {radius} must be positive")));
    }
    let delta = spec.delta();
    spec.require_disc(center, radius, 2.0 * delta, "circle average")?;
    let k = circle_points(radius, delta);
    let scale = 1.0 / k as f64;
    let mut stencil = Vec::with_capacity(4 * k);
    for i in 0..k {
        let theta = TAU * i as f64 / k as f64;
        let p = Point::new(center.x + radius * theta.cos(), center.y + radius * theta.sin());
        stencil.extend(bilinear(spec, p).into_iter().map(|(n, w)| (n, w * scale)));
    }
    Ok(stencil)
}

/// Mean of the bilinearly interpolated field over `max(64, ceil(2 pi r / delta))`
/// equally spaced points of the circle.
pub fn circle_average(field: &Field, center: Point, radius: f64) -> Result<f64> {
    let delta = field.spec.delta();
    field.spec.require_disc(center, radius, 2.0 * delta, "circle average")?;
    let k = circle_points(radius, delta);
    let sum: f64 = (0..k)
        .map(|i| {
            let theta = TAU * i as f64 / k as f64;
            field.interpolate(Point::new(
                center.x + radius * theta.cos(),
                center.y + radius * theta.sin(),
            ))
        })
        .sum();
    Ok(sum / k as f64)
}

/// Pointwise `h + f`. The result keeps the seed, is marked augmented and has
/// its normalization flag recomputed.
pub fn add_function(field: &Field, f: impl Fn(Point) -> f64) -> Result<Field> {
    let spec = field.spec;
    let mut values = Vec::with_capacity(spec.len());
    for (i, v) in field.values.iter().enumerate() {
        let p = spec.point_of_index(i);
        let fv = f(p);
        if !fv.is_finite() {
            return Err(Error::Data(format!(
                "added function is non-finite ({fv}) at ({}, {})",
                p.x, p.y
            )));
        }
        values.push(v + fv);
    }
    check_finite(&spec, &values)?;
    let mut out = Field {
        spec,
        values,
        seed: field.seed,
        kind: field.kind,
        normalized: false,
        origin: Origin::Augmented,
        calibration: field.calibration,
    };
    out.normalized = out.measure_normalized();
    Ok(out)
}
