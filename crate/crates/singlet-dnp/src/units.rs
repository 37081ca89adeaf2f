//! Unit helpers. All frequencies inside the library are angular (rad/s);
//! conversion from cyclic units happens once, here.

use std::f64::consts::TAU;

/// Cyclic MHz to angular rad/s.
pub fn two_pi_mhz(mhz: f64) -> f64 {
    TAU * mhz * 1e6
}

/// Cyclic GHz to angular rad/s.
pub fn two_pi_ghz(ghz: f64) -> f64 {
    TAU * ghz * 1e9
}

/// Cyclic Hz to angular rad/s.
pub fn two_pi_hz(hz: f64) -> f64 {
    TAU * hz
}

/// Angular rad/s back to cyclic Hz.
pub fn to_hz(angular: f64) -> f64 {
    angular / TAU
}
