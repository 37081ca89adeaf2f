//! Model of a two-stage nuclear hyperpolarization pipeline: microwave-driven
//! polarization transfer from NV centers in nanodiamond to 13C-1H pairs,
//! followed by an adiabatic field ramp that converts the polarization
//! difference into long-lived singlet order.

pub mod buildup;
pub mod config;
pub mod error;
pub mod figures;
pub mod nv_orientation;
pub mod ode;
pub mod pair_dynamics;
pub mod quadrature;
pub mod spectral;
pub mod transfer;
pub mod units;
