//! Bulk polarization build-up from averaged transfer rates and the
//! flow-cell geometry.

use std::f64::consts::PI;

use crate::error::{ModelError, Result};
use crate::nv_orientation::{ensemble_average_rate, NvEnsembleSpec};
use crate::spectral::CorrelationTime;
use crate::transfer::{DriveSpec, NuclearSpecies};

/// Random close packing bound for spheres.
const MAX_PACKING_FRACTION: f64 = 0.74;

/// Flow-cell geometry, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowGeometry {
    pub channel_diameter: f64,
    pub gel_length: f64,
    pub nd_diameter: f64,
    pub nd_volume_fraction: f64,
    pub nv_yield_per_nd: f64,
    /// Spin-pair number density, 1/m^3.
    pub pair_density: f64,
    pub flow_rate: f64,
    /// Residence time t1 of the solvent in the polarizing cell, seconds.
    pub residence_time: f64,
}

impl FlowGeometry {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("channel_diameter", self.channel_diameter),
            ("gel_length", self.gel_length),
            ("nd_diameter", self.nd_diameter),
            ("nd_volume_fraction", self.nd_volume_fraction),
            ("nv_yield_per_nd", self.nv_yield_per_nd),
            ("pair_density", self.pair_density),
            ("flow_rate", self.flow_rate),
            ("residence_time", self.residence_time),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(ModelError::InvalidInput(format!(
                    "geometry.{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.nd_volume_fraction >= MAX_PACKING_FRACTION {
            return Err(ModelError::InvalidInput(format!(
                "geometry.nd_volume_fraction {} exceeds the sphere packing bound {MAX_PACKING_FRACTION}",
                self.nd_volume_fraction
            )));
        }
        Ok(())
    }
}

/// Bulk polarizations of the two pair members.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationPair {
    pub p_c: f64,
    pub p_h: f64,
}

impl PolarizationPair {
    pub fn new(p_c: f64, p_h: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&p_c) || !(-1.0..=1.0).contains(&p_h) {
            return Err(ModelError::InvalidInput(format!(
                "polarizations must lie in [-1, 1], got ({p_c}, {p_h})"
            )));
        }
        Ok(Self { p_c, p_h })
    }
}

/// Ratio of NV electron spins to nuclear pair spins in the polarizing cell:
/// (ND number density * NV yield per ND) / pair density.
pub fn nv_to_nuclear_ratio(geom: &FlowGeometry) -> Result<f64> {
    geom.validate()?;
    let r = geom.nd_diameter / 2.0;
    let nd_volume = 4.0 / 3.0 * PI * r * r * r;
    let nd_number_density = geom.nd_volume_fraction / nd_volume;
    Ok(nd_number_density * geom.nv_yield_per_nd / geom.pair_density)
}

/// Linear build-up p = ratio * w_eff * t1, clamped to [-1, 1]. The second
/// return value flags a clamp, i.e. the linear model left its validity range.
pub fn bulk_polarization(w_eff: f64, ratio: f64, t1: f64) -> Result<(f64, bool)> {
    if !w_eff.is_finite() || !ratio.is_finite() || !t1.is_finite() || t1 < 0.0 {
        return Err(ModelError::InvalidInput(format!(
            "bulk polarization needs finite inputs and t1 >= 0, got ({w_eff}, {ratio}, {t1})"
        )));
    }
    let raw = w_eff * ratio * t1;
    let clamped = raw.clamp(-1.0, 1.0);
    Ok((clamped, clamped != raw))
}

/// Everything needed to evaluate the two-species build-up at one
/// correlation time.
#[derive(Debug, Clone, Copy)]
pub struct BuildupModel {
    pub hydrogen: NuclearSpecies,
    pub carbon: NuclearSpecies,
    pub nv: NvEnsembleSpec,
    pub drive: DriveSpec,
    pub b: f64,
    pub nv_to_nuclear: f64,
    pub t1: f64,
    pub quadrature_nodes: usize,
}

/// One row of the total-polarization sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub tau_c: f64,
    pub p_h: f64,
    pub p_c: f64,
    pub clamped: bool,
}

impl BuildupModel {
    pub fn species_polarization(&self, species: &NuclearSpecies, tau_c: CorrelationTime, c0_rate: f64) -> Result<(f64, bool)> {
        let w = ensemble_average_rate(
            species,
            tau_c,
            &self.nv,
            &self.drive,
            self.b,
            c0_rate,
            self.quadrature_nodes,
        )?;
        bulk_polarization(w, self.nv_to_nuclear, self.t1)
    }

    /// Bulk polarization of both species on a correlation-time grid.
    pub fn polarization_sweep(&self, tau_c_grid: &[f64], c0_rate: f64) -> Result<Vec<SweepRow>> {
        if tau_c_grid.is_empty() {
            return Err(ModelError::InvalidInput("empty correlation-time grid".into()));
        }
        tau_c_grid
            .iter()
            .map(|&tc| {
                let tau = CorrelationTime::new(tc)?;
                let (p_h, ch) = self.species_polarization(&self.hydrogen, tau, c0_rate)?;
                let (p_c, cc) = self.species_polarization(&self.carbon, tau, c0_rate)?;
                Ok(SweepRow {
                    tau_c: tc,
                    p_h,
                    p_c,
                    clamped: ch || cc,
                })
            })
            .collect()
    }

    /// The unique rate constant that makes the bulk 1H polarization equal
    /// `target_ph` at `tau_c` (the model is linear in the rate constant).
    pub fn calibrate_c0(&self, target_ph: f64, tau_c: CorrelationTime) -> Result<f64> {
        if !target_ph.is_finite() || target_ph < 0.0 {
            return Err(ModelError::InvalidInput(format!(
                "calibration target must be finite and >= 0, got {target_ph}"
            )));
        }
        if target_ph == 0.0 {
            return Ok(0.0);
        }
        let unit = ensemble_average_rate(
            &self.hydrogen,
            tau_c,
            &self.nv,
            &self.drive,
            self.b,
            1.0,
            self.quadrature_nodes,
        )?;
        let slope = self.nv_to_nuclear * unit * self.t1;
        if slope == 0.0 {
            return Err(ModelError::NoSolution(
                "averaged spectral difference vanishes; no rate constant reaches the target".into(),
            ));
        }
        Ok(target_ph / slope)
    }
}
