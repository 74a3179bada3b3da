//! Closed-form exponents.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// `sqrt(8/3)`, where `d_gamma = 4` is known exactly.
pub const GAMMA_PURE_GRAVITY: f64 = 1.632_993_161_855_452;

/// `Q = 2/gamma + gamma/2` for `0 < gamma <= 2`.
pub fn q_subcritical(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 2.0) {
        return Err(Error::Domain(format!("gamma = {gamma} must lie in (0, 2]")));
    }
    Ok(2.0 / gamma + gamma / 2.0)
}

fn check_gamma(gamma: f64) -> Result<()> {
    // allow the last ulp so that sqrt(8.0 / 3.0) computed either way is accepted
    if !(gamma > 0.0 && gamma <= GAMMA_PURE_GRAVITY * (1.0 + f64::EPSILON)) {
        return Err(Error::Domain(format!("gamma = {gamma} must lie in (0, sqrt(8/3)]")));
    }
    Ok(())
}

/// Upper bound `2 + gamma^2/2 + sqrt2 gamma` on the LQG dimension `d_gamma`.
pub fn d_gamma_upper(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(2.0 + gamma * gamma / 2.0 + SQRT_2 * gamma)
}

/// Enclosure `(gamma / d_upper, gamma / 2)` of `xi = gamma / d_gamma`.
pub fn xi_bounds_of_gamma(gamma: f64) -> Result<(f64, f64)> {
    Ok((gamma / d_gamma_upper(gamma)?, gamma / 2.0))
}

/// Default `xi` for a given `gamma`: the midpoint of the enclosure.
pub fn xi_for_gamma(gamma: f64) -> Result<f64> {
    let (lo, hi) = xi_bounds_of_gamma(gamma)?;
    Ok(0.5 * (lo + hi))
}
