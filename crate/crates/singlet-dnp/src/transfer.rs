//! Steady-state polarization transfer from the driven electron to the
//! nuclear species of the 13C-1H pair.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::spectral::{spectral_density, CorrelationTime, SpectralValue};

/// Microwave drive parameters, angular units (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    rabi: f64,
    detuning0: f64,
}

impl DriveSpec {
    pub fn new(rabi: f64, detuning0: f64) -> Result<Self> {
        if !rabi.is_finite() || rabi <= 0.0 {
            return Err(ModelError::InvalidInput(format!(
                "Rabi frequency must be finite and > 0, got {rabi}"
            )));
        }
        if !detuning0.is_finite() || detuning0 < 0.0 {
            return Err(ModelError::InvalidInput(format!(
                "on-resonance detuning must be finite and >= 0, got {detuning0}"
            )));
        }
        Ok(Self { rabi, detuning0 })
    }

    pub fn rabi(&self) -> f64 {
        self.rabi
    }

    pub fn detuning0(&self) -> f64 {
        self.detuning0
    }

    /// Drive asymmetry ratio 2*|eps|/Omega, recomputed on demand so it can
    /// never go stale. The magnitude keeps the denominator weight positive
    /// for off-resonance operating points.
    pub fn c0_drive(&self) -> f64 {
        2.0 * self.detuning0.abs() / self.rabi
    }

    /// Drive with the detuning replaced (orientation-dependent operating
    /// points). The detuning may be negative off resonance.
    pub fn with_detuning(&self, detuning: f64) -> DriveSpec {
        DriveSpec {
            rabi: self.rabi,
            detuning0: detuning,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpeciesLabel {
    C13,
    H1,
}

/// A spin-1/2 nuclear species, gyromagnetic ratio in rad/(s*T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuclearSpecies {
    pub label: SpeciesLabel,
    pub gamma: f64,
}

impl NuclearSpecies {
    pub fn new(label: SpeciesLabel, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(ModelError::InvalidInput(format!(
                "gyromagnetic ratio must be finite and > 0, got {gamma}"
            )));
        }
        Ok(Self { label, gamma })
    }

    /// Larmor angular frequency at field `b` (tesla).
    pub fn larmor(&self, b: f64) -> f64 {
        self.gamma * b
    }
}

/// The three frequencies entering the transfer expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferFrequencies {
    /// Dressed electron frequency.
    pub omega_e: f64,
    /// Matching difference omega_e - omega_i (signed).
    pub omega_0: f64,
    /// Mismatch sum omega_e + omega_i.
    pub omega_2: f64,
}

impl TransferFrequencies {
    pub fn new(omega_e: f64, omega_i: f64) -> Self {
        Self {
            omega_e,
            omega_0: omega_e - omega_i,
            omega_2: omega_e + omega_i,
        }
    }
}

/// Dressed electron frequency sqrt(eps^2 + Omega^2).
pub fn dressed_electron_frequency(drive: &DriveSpec) -> f64 {
    drive.detuning0.hypot(drive.rabi)
}

/// Which final term the steady-state denominator carries.
///
/// The symmetric (`Corrected`) form closes the denominator with J(omega_2);
/// `AsWritten` repeats J(omega_0). Both are exposed so they can be compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorMode {
    AsWritten,
    Corrected,
}

impl DenominatorMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DenominatorMode::AsWritten => "as_written",
            DenominatorMode::Corrected => "corrected",
        }
    }
}

impl std::str::FromStr for DenominatorMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "as_written" => Ok(DenominatorMode::AsWritten),
            "corrected" => Ok(DenominatorMode::Corrected),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

/// Steady-state nuclear polarization from the three spectral densities.
///
/// P_s = -(j0 - j2) / (j0 + c0*j_mid + last), last = j0 or j2 per `mode`.
pub fn steady_state_polarization(
    j0: SpectralValue,
    j2: SpectralValue,
    j_mid: SpectralValue,
    c0: f64,
    mode: DenominatorMode,
) -> Result<f64> {
    if !c0.is_finite() || c0 < 0.0 {
        return Err(ModelError::InvalidInput(format!(
            "drive ratio must be finite and >= 0, got {c0}"
        )));
    }
    let last = match mode {
        DenominatorMode::AsWritten => j0.value(),
        DenominatorMode::Corrected => j2.value(),
    };
    let den = j0.value() + c0 * j_mid.value() + last;
    if den == 0.0 {
        return Err(ModelError::NoSolution(
            "vanishing denominator in steady-state polarization".into(),
        ));
    }
    Ok(-(j0.value() - j2.value()) / den)
}

/// Frequencies seen by `species` at field `b` under `drive`.
pub fn species_frequencies(species: &NuclearSpecies, b: f64, drive: &DriveSpec) -> TransferFrequencies {
    TransferFrequencies::new(dressed_electron_frequency(drive), species.larmor(b))
}

/// Steady-state polarization of one nuclear species at field `b` (tesla).
pub fn species_polarization(
    species: &NuclearSpecies,
    b: f64,
    drive: &DriveSpec,
    tau_c: CorrelationTime,
    mode: DenominatorMode,
) -> Result<f64> {
    if !b.is_finite() || b <= 0.0 {
        return Err(ModelError::InvalidInput(format!(
            "magnetic field must be finite and > 0, got {b}"
        )));
    }
    let f = species_frequencies(species, b, drive);
    let j0 = spectral_density(f.omega_0.abs(), tau_c)?;
    let j2 = spectral_density(f.omega_2, tau_c)?;
    let j_mid = spectral_density(species.larmor(b), tau_c)?;
    steady_state_polarization(j0, j2, j_mid, drive.c0_drive(), mode)
}

/// Polarization transfer rate W = c0_rate * (j0 - j2), 1/s.
pub fn transfer_rate(j0: SpectralValue, j2: SpectralValue, c0_rate: f64) -> f64 {
    c0_rate * (j0.value() - j2.value())
}
