use std::f64::consts::{PI, SQRT_2};

use super::{Field, FieldKind};
use crate::error::{Error, Result};

/// Truncation radius in standard deviations.
const TRUNCATION_SIGMAS: f64 = 5.0;

/// Heat kernel `p_{eps^2/2}` sampled at cell centres, truncated to a square of
/// half-side `radius_cells` and renormalized to unit mass.
///
/// The kernel is a product of two identical one-dimensional profiles, which
/// [`mollify`] exploits to convolve in two passes.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    eps: f64,
    delta: f64,
    radius_cells: usize,
    profile: Vec<f64>,
    weights: Vec<f64>,
    raw_mass: f64,
}

impl Kernel {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn radius_cells(&self) -> usize {
        self.radius_cells
    }

    pub fn side(&self) -> usize {
        2 * self.radius_cells + 1
    }

    /// Normalized weights, row-major over `side() x side()` cells; offset
    /// `(dx, dy)` lives at `(dy + r) * side + (dx + r)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius_cells as isize;
        let side = self.side() as isize;
        self.weights[((dy + r) * side + (dx + r)) as usize]
    }

    /// Normalized one-dimensional factor; `weights = profile (x) profile`.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// `p_{eps^2/2}(0, 0) * delta^2`, the centre weight before renormalization.
    pub fn prenormalized_center(&self) -> f64 {
        self.delta * self.delta / (PI * self.eps * self.eps)
    }

    /// Total mass of the sampled kernel before renormalization.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }
}

pub fn make_kernel(eps: f64, delta: f64) -> Result<Kernel> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Data(format!("mesh spacing {delta} must be positive")));
    }
    if !(eps.is_finite() && eps >= 2.0 * delta) {
        return Err(Error::Resolution { eps, delta });
    }
    let sigma = eps / SQRT_2;
    let radius_cells = (TRUNCATION_SIGMAS * sigma / delta).ceil() as usize;
    // p_s(x) = exp(-|x|^2 / 2s) / (2 pi s) with s = eps^2 / 2 factors into two
    // 1-d Gaussians of variance s; each carries sqrt(delta^2 / (2 pi s)).
    let s = eps * eps / 2.0;
    let norm_1d = delta / (2.0 * PI * s).sqrt();
    let raw: Vec<f64> = (0..=2 * radius_cells)
        .map(|i| {
            let x = (i as f64 - radius_cells as f64) * delta;
            norm_1d * (-x * x / (2.0 * s)).exp()
        })
        .collect();
    let raw_1d: f64 = raw.iter().sum();
    let profile: Vec<f64> = raw.iter().map(|w| w / raw_1d).collect();
    let weights = profile
        .iter()
        .flat_map(|wy| profile.iter().map(move |wx| wx * wy))
        .collect();
    Ok(Kernel {
        eps,
        delta,
        radius_cells,
        profile,
        weights,
        raw_mass: raw_1d * raw_1d,
    })
}

/// Convolves a raw field with the heat kernel at scale `eps`.
///
/// Near the window edge the kernel is renormalized to the mass that falls
/// inside the window, which keeps constants (and the operation's linearity)
/// exact everywhere. The normalization flag is carried over, not recomputed.
pub fn mollify(field: &Field, eps: f64) -> Result<Field> {
    if let FieldKind::Mollified { eps: prior } = field.kind {
        return Err(Error::State(format!("field is already mollified at eps = {prior}")));
    }
    let spec = field.spec;
    let kernel = make_kernel(eps, spec.delta())?;
    let n = spec.n();
    let r = kernel.radius_cells;
    let g = &kernel.profile;

    // inverse in-window mass for a 1-d pass centred at each index
    let inv_mass: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(n - 1);
            let m: f64 = (lo..=hi).map(|j| g[j + r - i]).sum();
            m.recip()
        })
        .collect();

    // horizontal pass
    let mut tmp = vec![0.0; n * n];
    for iy in 0..n {
        let src = &field.values[iy * n..(iy + 1) * n];
        let dst = &mut tmp[iy * n..(iy + 1) * n];
        for (ix, out) in dst.iter_mut().enumerate() {
            let lo = ix.saturating_sub(r);
            let hi = (ix + r).min(n - 1);
            let taps = &g[lo + r - ix..=hi + r - ix];
            let acc: f64 = taps.iter().zip(&src[lo..=hi]).map(|(w, v)| w * v).sum();
            *out = acc * inv_mass[ix];
        }
    }

    // vertical pass, accumulated row by row for locality
    let mut values = vec![0.0; n * n];
    for iy in 0..n {
        let lo = iy.saturating_sub(r);
        let hi = (iy + r).min(n - 1);
        let dst = &mut values[iy * n..(iy + 1) * n];
        for jy in lo..=hi {
            let w = g[jy + r - iy];
            let src = &tmp[jy * n..(jy + 1) * n];
            for (o, v) in dst.iter_mut().zip(src) {
                *o += w * v;
            }
        }
        let s = inv_mass[iy];
        for o in dst.iter_mut() {
            *o *= s;
        }
    }

    Ok(Field {
        spec,
        values,
        seed: field.seed,
        kind: FieldKind::Mollified { eps },
        normalized: field.normalized,
        origin: field.origin,
        calibration: field.calibration,
    })
}
