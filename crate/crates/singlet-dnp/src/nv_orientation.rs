//! Randomly oriented NV ensemble: orientation-dependent level structure,
//! detuning from the microwave drive, optically pumped initial state and
//! the solid-angle-averaged effective transfer rate.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::quadrature::gauss_legendre;
use crate::spectral::{spectral_density, CorrelationTime};
use crate::transfer::{DriveSpec, NuclearSpecies};

/// Resonance window selecting the near-90-degree orientations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowSpec {
    /// Orientations with |detuning from the 90-degree resonance| below the
    /// threshold (rad/s).
    DetuningThreshold { threshold: f64 },
    /// Fixed polar-angle band, radians.
    ThetaInterval { lo: f64, hi: f64 },
}

/// NV ensemble parameters, angular units (rad/s) and rad/(s*T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NvEnsembleSpec {
    pub zfs_d: f64,
    pub strain_e: f64,
    pub gamma_e: f64,
    /// Electron polarization inside the resonance window.
    pub pe0: f64,
    pub window: WindowSpec,
}

impl NvEnsembleSpec {
    pub fn new(zfs_d: f64, strain_e: f64, gamma_e: f64, pe0: f64, window: WindowSpec) -> Result<Self> {
        if !zfs_d.is_finite() || zfs_d <= 0.0 {
            return Err(ModelError::InvalidInput(format!(
                "zero-field splitting must be finite and > 0, got {zfs_d}"
            )));
        }
        if !strain_e.is_finite() || strain_e < 0.0 {
            return Err(ModelError::InvalidInput(format!(
                "strain must be finite and >= 0, got {strain_e}"
            )));
        }
        if !gamma_e.is_finite() || gamma_e <= 0.0 {
            return Err(ModelError::InvalidInput(format!(
                "electron gyromagnetic ratio must be finite and > 0, got {gamma_e}"
            )));
        }
        if !(0.0..=1.0).contains(&pe0) {
            return Err(ModelError::InvalidInput(format!(
                "electron polarization must lie in [0, 1], got {pe0}"
            )));
        }
        if let WindowSpec::ThetaInterval { lo, hi } = window {
            if !(0.0..=PI).contains(&lo) || !(0.0..=PI).contains(&hi) || lo > hi {
                return Err(ModelError::InvalidInput(format!(
                    "theta interval must satisfy 0 <= lo <= hi <= pi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            zfs_d,
            strain_e,
            gamma_e,
            pe0,
            window,
        })
    }
}

/// Orientation on the unit sphere; the uniform measure carries weight
/// sin(theta) dtheta dphi / 4pi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub theta: f64,
    pub phi: f64,
}

/// The four orientation-dependent terms of the NV level structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularTerms {
    /// Effective axial splitting D(theta).
    pub d_theta: f64,
    pub g1: f64,
    pub g2: f64,
    /// Second-order level shift delta(theta).
    pub delta: f64,
}

/// Evaluate D(theta), G1, G2 and delta(theta) at field `b`.
pub fn angular_terms(theta: f64, spec: &NvEnsembleSpec, b: f64) -> Result<AngularTerms> {
    if !theta.is_finite() || !b.is_finite() || b <= 0.0 {
        return Err(ModelError::InvalidInput(format!(
            "need finite theta and b > 0, got theta = {theta}, b = {b}"
        )));
    }
    let (d, e) = (spec.zfs_d, spec.strain_e);
    let c2 = (2.0 * theta).cos();
    let d_theta = (d * (1.0 + 3.0 * c2) + 3.0 * e * (1.0 - c2)) / 4.0;
    let g1 = (d - e) * theta.sin() * theta.cos() / std::f64::consts::SQRT_2;
    let g2 = (d + 3.0 * e + (e - d) * c2) / 4.0;
    let ge_b = spec.gamma_e * b;
    let denom = ge_b * ge_b - d_theta * d_theta;
    if denom == 0.0 {
        return Err(ModelError::SingularShift { theta });
    }
    let delta = ge_b * g1 * g1 / denom + g2 * g2 / (2.0 * ge_b);
    Ok(AngularTerms {
        d_theta,
        g1,
        g2,
        delta,
    })
}

/// Frequency of the |0> <-> |-1> transition branch at orientation `theta`.
fn transition_frequency(theta: f64, spec: &NvEnsembleSpec, b: f64) -> Result<f64> {
    let t = angular_terms(theta, spec, b)?;
    Ok(spec.gamma_e * b + t.delta - t.d_theta)
}

/// Effective drive detuning at orientation `theta` and its offset from the
/// 90-degree resonance anchor: epsilon(theta) and Delta' = epsilon - eps0.
pub fn detuning_profile(
    theta: f64,
    drive: &DriveSpec,
    spec: &NvEnsembleSpec,
    b: f64,
) -> Result<(f64, f64)> {
    let w = transition_frequency(theta, spec, b)?;
    let w90 = transition_frequency(FRAC_PI_2, spec, b)?;
    let delta_prime = w - w90;
    Ok((drive.detuning0() + delta_prime, delta_prime))
}

/// Lab-frame amplitudes of the optically pumped state, ordered
/// [|+1>, |0>, |-1>].
pub fn optical_initial_state(theta: f64, phi: f64) -> [Complex64; 3] {
    let a = theta.sin() / std::f64::consts::SQRT_2;
    [
        Complex64::from_polar(a, phi),
        Complex64::new(theta.cos(), 0.0),
        -Complex64::from_polar(a, -phi),
    ]
}

/// Step model of the initial electron polarization: `pe0` inside the
/// resonance window, zero outside.
pub fn electron_polarization(
    theta: f64,
    spec: &NvEnsembleSpec,
    drive: &DriveSpec,
    b: f64,
) -> Result<f64> {
    let (lo, hi) = window_interval(spec, drive, b)?;
    Ok(if (lo..=hi).contains(&theta) {
        spec.pe0
    } else {
        0.0
    })
}

/// Resolve the window to a polar-angle band [lo, hi].
///
/// For a detuning threshold the band edges are found by scanning |Delta'|
/// away from 90 degrees and bisecting the first crossing; the profile is
/// symmetric under theta -> pi - theta.
pub fn window_interval(spec: &NvEnsembleSpec, drive: &DriveSpec, b: f64) -> Result<(f64, f64)> {
    match spec.window {
        WindowSpec::ThetaInterval { lo, hi } => Ok((lo, hi)),
        WindowSpec::DetuningThreshold { threshold } => {
            if !threshold.is_finite() {
                return Ok((0.0, PI));
            }
            if threshold <= 0.0 {
                return Err(ModelError::InvalidInput(format!(
                    "detuning threshold must be > 0, got {threshold}"
                )));
            }
            let excess = |x: f64| -> Result<f64> {
                let (_, dp) = detuning_profile(FRAC_PI_2 - x, drive, spec, b)?;
                Ok(dp.abs() - threshold)
            };
            // scan outward from the resonance anchor
            let n_scan = 4096;
            let mut x_lo = 0.0;
            let mut x_hi = FRAC_PI_2;
            let mut found = false;
            let mut prev = excess(0.0)?;
            for k in 1..=n_scan {
                let x = FRAC_PI_2 * k as f64 / n_scan as f64;
                let cur = excess(x)?;
                if prev <= 0.0 && cur > 0.0 {
                    x_lo = FRAC_PI_2 * (k - 1) as f64 / n_scan as f64;
                    x_hi = x;
                    found = true;
                    break;
                }
                prev = cur;
            }
            if !found {
                // threshold exceeds the largest detuning: whole sphere
                return Ok((0.0, PI));
            }
            for _ in 0..200 {
                let mid = 0.5 * (x_lo + x_hi);
                if excess(mid)? <= 0.0 {
                    x_lo = mid;
                } else {
                    x_hi = mid;
                }
            }
            let half_width = 0.5 * (x_lo + x_hi);
            Ok((FRAC_PI_2 - half_width, FRAC_PI_2 + half_width))
        }
    }
}

/// Fraction of the uniform sphere measure covered by the window.
pub fn window_fraction(spec: &NvEnsembleSpec, b: f64, drive: &DriveSpec, window: &WindowSpec) -> Result<f64> {
    let resolved = NvEnsembleSpec {
        window: *window,
        ..*spec
    };
    let (lo, hi) = window_interval(&resolved, drive, b)?;
    Ok(0.5 * (lo.cos() - hi.cos()))
}

/// Transfer rate at one orientation with unit rate constant:
/// J(|omega_E(theta) - omega_i|) - J(omega_E(theta) + omega_i).
fn rate_kernel(
    theta: f64,
    species: &NuclearSpecies,
    tau_c: CorrelationTime,
    spec: &NvEnsembleSpec,
    drive: &DriveSpec,
    b: f64,
) -> Result<f64> {
    let (eps, _) = detuning_profile(theta, drive, spec, b)?;
    let omega_e = eps.hypot(drive.rabi());
    let omega_i = species.larmor(b);
    let j0 = spectral_density((omega_e - omega_i).abs(), tau_c)?;
    let j2 = spectral_density(omega_e + omega_i, tau_c)?;
    Ok(j0.value() - j2.value())
}

/// Solid-angle average of W_i(theta) * P_e(theta) over the resonance
/// window, normalized by the window solid angle. Gauss-Legendre in
/// cos(theta); the azimuthal integral is trivial by symmetry.
pub fn ensemble_average_rate(
    species: &NuclearSpecies,
    tau_c: CorrelationTime,
    spec: &NvEnsembleSpec,
    drive: &DriveSpec,
    b: f64,
    c0_rate: f64,
    nodes: usize,
) -> Result<f64> {
    if !c0_rate.is_finite() || c0_rate < 0.0 {
        return Err(ModelError::InvalidInput(format!(
            "rate constant must be finite and >= 0, got {c0_rate}"
        )));
    }
    let (lo, hi) = window_interval(spec, drive, b)?;
    let (u_lo, u_hi) = (hi.cos(), lo.cos());
    if u_hi <= u_lo {
        return Err(ModelError::EmptyWindow);
    }
    let (xs, ws) = gauss_legendre(nodes);
    let half = 0.5 * (u_hi - u_lo);
    let mid = 0.5 * (u_hi + u_lo);
    let mut acc = 0.0;
    let mut norm = 0.0;
    for (x, w) in xs.iter().zip(&ws) {
        let u = mid + half * x;
        let theta = u.clamp(-1.0, 1.0).acos();
        acc += w * rate_kernel(theta, species, tau_c, spec, drive, b)?;
        norm += w;
    }
    Ok(spec.pe0 * c0_rate * acc / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{two_pi_ghz, two_pi_mhz};

    const B: f64 = 0.36;

    // Frozen pre-build oracle values (reference parameters, B = 0.36 T):
    // window half-width for |Delta'| < 2pi*10 MHz, its solid-angle fraction,
    // Delta'(80 deg), and the window-averaged unit-rate transfers at 15 ns.
    const WINDOW_HALF_WIDTH_DEG: f64 = 2.841_396_943_077_306;
    const WINDOW_FRACTION: f64 = 0.049_571_407_358_147_37;
    const DPRIME_80DEG_MHZ: f64 = -123.006_023_275_975_05;
    const WBAR_H_UNIT_15NS: f64 = 0.066_665_375_608_518_89;
    const WBAR_C_UNIT_15NS: f64 = 0.015_254_869_954_256_949;

    fn spec() -> NvEnsembleSpec {
        NvEnsembleSpec::new(
            two_pi_ghz(2.87),
            two_pi_mhz(20.0),
            two_pi_ghz(28.024),
            0.125,
            WindowSpec::DetuningThreshold {
                threshold: two_pi_mhz(10.0),
            },
        )
        .unwrap()
    }

    fn drive() -> DriveSpec {
        let w = two_pi_mhz(8.0 * std::f64::consts::SQRT_2);
        DriveSpec::new(w, w).unwrap()
    }

    fn hydrogen() -> NuclearSpecies {
        NuclearSpecies::new(crate::transfer::SpeciesLabel::H1, two_pi_mhz(42.577)).unwrap()
    }

    fn carbon() -> NuclearSpecies {
        NuclearSpecies::new(crate::transfer::SpeciesLabel::C13, two_pi_mhz(10.708)).unwrap()
    }

    #[test]
    fn aligned_orientation_collapses_the_terms() {
        let t = angular_terms(0.0, &spec(), B).unwrap();
        assert!((t.d_theta - two_pi_ghz(2.87)).abs() < 1e-3);
        assert_eq!(t.g1, 0.0);
        assert!((t.g2 - two_pi_mhz(20.0)).abs() < 1e-3);
    }

    #[test]
    fn perpendicular_orientation_values() {
        let t = angular_terms(FRAC_PI_2, &spec(), B).unwrap();
        let expected = (3.0 * two_pi_mhz(20.0) - two_pi_ghz(2.87)) / 2.0;
        assert!((t.d_theta - expected).abs() < 1.0);
        // quoted interval bound -2pi*1.43 GHz ignores the strain shift
        assert!((t.d_theta.abs() - two_pi_ghz(1.43)).abs() / two_pi_ghz(1.43) < 0.03);
        assert!(t.delta >= 0.0 && t.delta <= two_pi_mhz(140.0));
    }

    #[test]
    fn d_theta_symmetry_and_range() {
        let s = spec();
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for k in 0..=2000 {
            let th = PI * k as f64 / 2000.0;
            let t = angular_terms(th, &s, B).unwrap();
            let t_mirror = angular_terms(PI - th, &s, B).unwrap();
            assert!((t.d_theta - t_mirror.d_theta).abs() < 1e-6 * s.zfs_d);
            min = min.min(t.d_theta);
            max = max.max(t.d_theta);
            assert!(t.delta >= 0.0 && t.delta <= two_pi_mhz(140.0));
        }
        assert!((min - (3.0 * s.strain_e - s.zfs_d) / 2.0).abs() < 1e-6 * s.zfs_d);
        assert!((max - s.zfs_d).abs() < 1e-6 * s.zfs_d);
    }

    #[test]
    fn resonance_anchor_and_profile() {
        let (eps, dp) = detuning_profile(FRAC_PI_2, &drive(), &spec(), B).unwrap();
        assert_eq!(dp, 0.0);
        assert_eq!(eps, drive().detuning0());

        let (_, dp80) = detuning_profile(80f64.to_radians(), &drive(), &spec(), B).unwrap();
        assert!(
            (dp80 - two_pi_mhz(DPRIME_80DEG_MHZ)).abs() < 1e-6 * two_pi_mhz(DPRIME_80DEG_MHZ).abs()
        );

        let (_, dp0) = detuning_profile(0.0, &drive(), &spec(), B).unwrap();
        assert!(dp0.abs() > two_pi_ghz(1.0), "far off resonance at theta = 0");
    }

    #[test]
    fn optical_state_examples_and_norm() {
        let aligned = optical_initial_state(0.0, 0.3);
        assert!((aligned[1].norm() - 1.0).abs() < 1e-15);
        assert!(aligned[0].norm() < 1e-15 && aligned[2].norm() < 1e-15);

        let perp = optical_initial_state(FRAC_PI_2, 1.1);
        assert!(perp[1].norm() < 1e-15);
        assert!((perp[0].norm_sqr() - 0.5).abs() < 1e-12);
        assert!((perp[2].norm_sqr() - 0.5).abs() < 1e-12);

        let mid = optical_initial_state(std::f64::consts::FRAC_PI_4, 0.0);
        assert!((mid[1].norm_sqr() - 0.5).abs() < 1e-12);

        for k in 0..200 {
            let th = PI * k as f64 / 199.0;
            let ph = 0.1 + 6.0 * k as f64 / 199.0;
            let v = optical_initial_state(th, ph);
            let n: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn step_polarization_model() {
        let s = spec();
        let d = drive();
        assert_eq!(electron_polarization(FRAC_PI_2, &s, &d, B).unwrap(), 0.125);
        assert_eq!(electron_polarization(0.0, &s, &d, B).unwrap(), 0.0);
        // 85 degrees is inside the geometric window variant
        let geo = NvEnsembleSpec {
            window: WindowSpec::ThetaInterval {
                lo: 80f64.to_radians(),
                hi: 100f64.to_radians(),
            },
            ..s
        };
        assert_eq!(
            electron_polarization(85f64.to_radians(), &geo, &d, B).unwrap(),
            0.125
        );
    }

    #[test]
    fn window_fraction_values() {
        let s = spec();
        let d = drive();
        let f = window_fraction(&s, B, &d, &s.window).unwrap();
        assert!((f - WINDOW_FRACTION).abs() < 1e-9, "fraction = {f}");

        let (lo, hi) = window_interval(&s, &d, B).unwrap();
        let half_deg = (hi - lo).to_degrees() / 2.0;
        assert!((half_deg - WINDOW_HALF_WIDTH_DEG).abs() < 1e-6);

        let geo = WindowSpec::ThetaInterval {
            lo: 80f64.to_radians(),
            hi: 100f64.to_radians(),
        };
        let fg = window_fraction(&s, B, &d, &geo).unwrap();
        let exact = 0.5 * (80f64.to_radians().cos() - 100f64.to_radians().cos());
        assert!((fg - exact).abs() < 1e-15);

        let whole = window_fraction(
            &s,
            B,
            &d,
            &WindowSpec::DetuningThreshold {
                threshold: f64::INFINITY,
            },
        )
        .unwrap();
        assert!((whole - 1.0).abs() < 1e-15);
    }

    #[test]
    fn window_fraction_monotone_in_threshold() {
        let s = spec();
        let d = drive();
        let mut prev = 0.0;
        for mhz in [0.1, 1.0, 5.0, 10.0, 50.0, 200.0, 2000.0] {
            let f = window_fraction(
                &s,
                B,
                &d,
                &WindowSpec::DetuningThreshold {
                    threshold: two_pi_mhz(mhz),
                },
            )
            .unwrap();
            assert!(f >= prev, "not monotone at {mhz} MHz");
            prev = f;
        }
    }

    #[test]
    fn frozen_window_averaged_rates() {
        let tc = CorrelationTime::new(15e-9).unwrap();
        let wh = ensemble_average_rate(&hydrogen(), tc, &spec(), &drive(), B, 1.0, 256).unwrap();
        let wc = ensemble_average_rate(&carbon(), tc, &spec(), &drive(), B, 1.0, 256).unwrap();
        assert!((wh - WBAR_H_UNIT_15NS).abs() < 1e-7 * WBAR_H_UNIT_15NS, "wh = {wh}");
        assert!((wc - WBAR_C_UNIT_15NS).abs() < 1e-7 * WBAR_C_UNIT_15NS, "wc = {wc}");
    }

    #[test]
    fn average_rate_properties() {
        let tc = CorrelationTime::new(15e-9).unwrap();
        let s = spec();
        let d = drive();
        // null pumping
        let off = NvEnsembleSpec { pe0: 0.0, ..s };
        assert_eq!(
            ensemble_average_rate(&hydrogen(), tc, &off, &d, B, 1.0, 64).unwrap(),
            0.0
        );
        // linear in the rate constant
        let w1 = ensemble_average_rate(&hydrogen(), tc, &s, &d, B, 1.0, 256).unwrap();
        let w7 = ensemble_average_rate(&hydrogen(), tc, &s, &d, B, 7.0, 256).unwrap();
        assert!((w7 - 7.0 * w1).abs() < 1e-12 * w7.abs());
        // empty window is an error, not zero
        let empty = NvEnsembleSpec {
            window: WindowSpec::ThetaInterval { lo: 1.0, hi: 1.0 },
            ..s
        };
        assert!(matches!(
            ensemble_average_rate(&hydrogen(), tc, &empty, &d, B, 1.0, 64),
            Err(ModelError::EmptyWindow)
        ));
    }

    #[test]
    fn quadrature_convergence_at_high_node_count() {
        let tc = CorrelationTime::new(15e-9).unwrap();
        let a = ensemble_average_rate(&hydrogen(), tc, &spec(), &drive(), B, 1.0, 2048).unwrap();
        let b = ensemble_average_rate(&hydrogen(), tc, &spec(), &drive(), B, 1.0, 4096).unwrap();
        // the kernel is analytic inside the window but the hydrogen
        // zero-quantum frequency vanishes just past the window edge, so
        // convergence is slower than spectral
        assert!((a - b).abs() / a.abs() < 2e-5);
    }

    #[test]
    fn nearly_constant_kernel_reduces_to_pe0_scaling() {
        // over a tiny symmetric band the kernel variation averages out at
        // first order and the mean reduces to pe0 times the center value
        let tc = CorrelationTime::new(15e-9).unwrap();
        let theta0 = 1.2;
        let s = NvEnsembleSpec {
            window: WindowSpec::ThetaInterval {
                lo: theta0 - 1e-6,
                hi: theta0 + 1e-6,
            },
            ..spec()
        };
        let d = drive();
        let avg = ensemble_average_rate(&hydrogen(), tc, &s, &d, B, 1.0, 64).unwrap();
        let center = rate_kernel(theta0, &hydrogen(), tc, &s, &d, B).unwrap();
        assert!((avg - 0.125 * center).abs() < 1e-6 * center.abs());
    }
}
