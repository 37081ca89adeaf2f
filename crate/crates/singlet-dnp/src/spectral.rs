//! Spectral density of the fluctuating electron-nuclear interaction.
//!
//! All transfer rates reduce to differences of `J` evaluated at the energy
//! matching and mismatch frequencies, so this is the scalar engine of the
//! whole build-up stage.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;

use crate::error::{ModelError, Result};

/// Above this value of `xi = omega * tau_c` the cube term in the denominator
/// would overflow long before the value is distinguishable from 0.
const XI_OVERFLOW_GUARD: f64 = 1e12;

/// Correlation time of the electron-nuclear interaction, seconds.
///
/// Strictly positive; sweeps typically cover 1e-10 ..= 1e-5 s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationTime(f64);

impl CorrelationTime {
    pub fn new(seconds: f64) -> Result<Self> {
        if !seconds.is_finite() || seconds <= 0.0 {
            return Err(ModelError::InvalidInput(format!(
                "correlation time must be finite and > 0, got {seconds}"
            )));
        }
        Ok(Self(seconds))
    }

    pub fn seconds(self) -> f64 {
        self.0
    }
}

/// Dimensionless spectral density value, in (0, 1] for omega >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralValue(f64);

impl SpectralValue {
    /// Wrap a raw value. Intended for synthetic test inputs; the physical
    /// route is [`spectral_density`].
    pub fn new(j: f64) -> Result<Self> {
        if !j.is_finite() || !(0.0..=1.0).contains(&j) {
            return Err(ModelError::InvalidInput(format!(
                "spectral value must lie in [0, 1], got {j}"
            )));
        }
        Ok(Self(j))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Evaluate the spectral density in the dimensionless variable `xi = omega * tau_c`.
///
/// J(xi) = Re[(1 + sqrt(i xi)/4) / (1 + sqrt(i xi) + 4 sqrt(i xi)^2/9 + sqrt(i xi)^3/9)]
/// with the principal branch sqrt(i) = exp(i pi/4). This choice gives J(0) = 1
/// and a monotone decay to 0.
fn j_of_xi(xi: f64) -> f64 {
    if xi == 0.0 {
        return 1.0;
    }
    if xi > XI_OVERFLOW_GUARD {
        return 0.0;
    }
    let s = Complex64::from_polar(xi.sqrt(), FRAC_PI_4);
    let s2 = s * s;
    let num = 1.0 + s / 4.0;
    let den = 1.0 + s + 4.0 * s2 / 9.0 + s2 * s / 9.0;
    (num / den).re
}

/// Spectral density at angular frequency `omega` (rad/s, >= 0).
pub fn spectral_density(omega: f64, tau_c: CorrelationTime) -> Result<SpectralValue> {
    if !omega.is_finite() || omega < 0.0 {
        return Err(ModelError::InvalidInput(format!(
            "frequency must be finite and >= 0, got {omega}"
        )));
    }
    Ok(SpectralValue(j_of_xi(omega * tau_c.seconds())))
}

/// Spectral density at the matching and mismatch frequencies in one call.
pub fn spectral_density_pair(
    omega_0: f64,
    omega_2: f64,
    tau_c: CorrelationTime,
) -> Result<(SpectralValue, SpectralValue)> {
    Ok((
        spectral_density(omega_0, tau_c)?,
        spectral_density(omega_2, tau_c)?,
    ))
}
