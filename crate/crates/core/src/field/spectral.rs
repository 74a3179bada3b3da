//! Spectral synthesis of a log-correlated field on a padded torus.
//!
//! On a torus with `N = n * pad` points per side the field is
//! `h(x) = Re sum_m a_m Z_m exp(2 pi i m.x / N)` with `Z_m` standard complex
//! Gaussians (real and imaginary parts `N(0, 1)`) and `a_m = 1 / (sqrt(2 pi) |m|)`,
//! which is the lattice version of the spectral density `2 pi / |k|^2` and makes
//! `Cov(h(x), h(y)) ~ -log|x - y|`. The zero mode is dropped.
//!
//! The calibration constant rescales the amplitudes so that the model variance
//! of `h_{1/e}(0) - h_1(0)` equals one exactly. That variance is a quadratic
//! form in the circle stencils and is evaluated with one FFT, so the
//! calibration is deterministic and cheap.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{circle_average, circle_stencil, Field, FieldKind, Origin};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Point};

/// Smallest grid on which a unit circle is resolved at the default half width.
pub const MIN_SAMPLING_N: usize = 64;

fn wrap(m: usize, big: usize) -> f64 {
    if m <= big / 2 {
        m as f64
    } else {
        m as f64 - big as f64
    }
}

/// Squared spectral amplitude for integer frequency `(mx, my)` (zero for the zero mode).
fn amplitude_sq(mx: usize, my: usize, big: usize) -> f64 {
    let (fx, fy) = (wrap(mx, big), wrap(my, big));
    let m2 = fx * fx + fy * fy;
    if m2 == 0.0 {
        0.0
    } else {
        1.0 / (TAU * m2)
    }
}

/// Samples a normalized raw field. Pure in `(spec, seed)`.
pub fn sample_field(spec: &GridSpec, seed: u64) -> Result<Field> {
    let n = spec.n();
    if n < MIN_SAMPLING_N {
        return Err(Error::Geometry(format!(
            "sampling needs n >= {MIN_SAMPLING_N}, got {n}"
        )));
    }
    let delta = spec.delta();
    if spec.half_width() <= 1.0 + 4.0 * delta {
        return Err(Error::Geometry(format!(
            "unit circle does not fit: half width {} <= 1 + 4 delta = {}",
            spec.half_width(),
            1.0 + 4.0 * delta
        )));
    }
    let scale = calibration(spec)?;
    let mut values = synthesize(spec, seed);
    for v in &mut values {
        *v *= scale;
    }
    let mut field = Field {
        spec: *spec,
        values,
        seed,
        kind: FieldKind::Raw,
        normalized: false,
        origin: Origin::Sampled,
        calibration: scale,
    };
    let shift = circle_average(&field, Point::ORIGIN, 1.0)?;
    for v in &mut field.values {
        *v -= shift;
    }
    field.normalized = true;
    Ok(field)
}

/// Uncalibrated torus field restricted to the `n x n` window.
///
/// The inverse transform runs over rows first and keeps only the `n` window
/// columns, so the second pass touches `n` instead of `N` columns.
fn synthesize(spec: &GridSpec, seed: u64) -> Vec<f64> {
    let n = spec.n();
    let big = n * spec.pad_factor();
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(big);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut row = vec![Complex64::default(); big];
    // window columns, transposed: cols[jx * big + my]
    let mut cols = vec![Complex64::default(); n * big];
    for my in 0..big {
        for (mx, slot) in row.iter_mut().enumerate() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let a = amplitude_sq(mx, my, big).sqrt();
            *slot = Complex64::new(a * re, a * im);
        }
        fft.process_with_scratch(&mut row, &mut scratch);
        for jx in 0..n {
            cols[jx * big + my] = row[jx];
        }
    }
    fft.process_with_scratch(&mut cols, &mut scratch);

    let mut out = vec![0.0; n * n];
    for jy in 0..n {
        for jx in 0..n {
            out[jy * n + jx] = cols[jx * big + jy].re;
        }
    }
    out
}

/// Model variance of `sum_j w_j h(x_j)` for the uncalibrated torus field.
fn quadratic_form(spec: &GridSpec, weights: &[(usize, usize, f64)]) -> f64 {
    let n = spec.n();
    let big = n * spec.pad_factor();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(big);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];

    // Row transforms of the weight image; only window rows can be nonzero.
    let mut dense = vec![0.0; n * n];
    for &(ix, iy, w) in weights {
        dense[iy * n + ix] += w;
    }
    let mut row = vec![Complex64::default(); big];
    // rows_hat[mx * n + iy]
    let mut rows_hat = vec![Complex64::default(); big * n];
    for iy in 0..n {
        let src = &dense[iy * n..(iy + 1) * n];
        if src.iter().all(|&w| w == 0.0) {
            continue;
        }
        row.fill(Complex64::default());
        for (slot, &w) in row.iter_mut().zip(src) {
            slot.re = w;
        }
        fft.process_with_scratch(&mut row, &mut scratch);
        for (mx, v) in row.iter().enumerate() {
            rows_hat[mx * n + iy] = *v;
        }
    }

    let mut col = vec![Complex64::default(); big];
    let mut total = 0.0;
    for mx in 0..big {
        col[..n].copy_from_slice(&rows_hat[mx * n..(mx + 1) * n]);
        col[n..].fill(Complex64::default());
        fft.process_with_scratch(&mut col, &mut scratch);
        total += col
            .iter()
            .enumerate()
            .map(|(my, v)| amplitude_sq(mx, my, big) * v.norm_sqr())
            .sum::<f64>();
    }
    total
}

fn increment_weights(spec: &GridSpec, r_small: f64, r_large: f64) -> Result<Vec<(usize, usize, f64)>> {
    let inner = circle_stencil(spec, Point::ORIGIN, r_small)?;
    let outer = circle_stencil(spec, Point::ORIGIN, r_large)?;
    Ok(inner
        .into_iter()
        .map(|(node, w)| (node.ix, node.iy, w))
        .chain(outer.into_iter().map(|(node, w)| (node.ix, node.iy, -w)))
        .collect())
}

type CalibrationKey = (usize, u64, usize);

fn calibration_cache() -> &'static Mutex<HashMap<CalibrationKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<CalibrationKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Amplitude scale making `Var(h_{1/e}(0) - h_1(0)) = 1` under the sampling model.
/// Computed once per grid spec and memoized.
pub fn calibration(spec: &GridSpec) -> Result<f64> {
    let key = (spec.n(), spec.half_width().to_bits(), spec.pad_factor());
    if let Some(&c) = calibration_cache().lock().unwrap().get(&key) {
        return Ok(c);
    }
    let weights = increment_weights(spec, (-1.0f64).exp(), 1.0)?;
    let var = quadratic_form(spec, &weights);
    if !(var.is_finite() && var > 0.0) {
        return Err(Error::Data(format!("degenerate calibration variance {var}")));
    }
    let c = var.sqrt().recip();
    calibration_cache().lock().unwrap().insert(key, c);
    Ok(c)
}

/// Exact model variance of `h_{r_small}(0) - h_{r_large}(0)` for calibrated
/// samples on `spec`, before the normalization shift (which cancels in the
/// difference anyway).
pub fn unit_circle_variance_model(spec: &GridSpec, r_small: f64, r_large: f64) -> Result<f64> {
    let c = calibration(spec)?;
    let weights = increment_weights(spec, r_small, r_large)?;
    Ok(c * c * quadratic_form(spec, &weights))
}
