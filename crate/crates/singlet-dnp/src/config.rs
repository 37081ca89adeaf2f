//! Run configuration: JSON file over built-in defaults, with provenance
//! tracking and a content hash for reproducible output headers.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::buildup::BuildupModel;
use crate::error::ModelError;
use crate::nv_orientation::{NvEnsembleSpec, WindowSpec};
use crate::pair_dynamics::{MapConvention, PairHamiltonianSpec, RampProtocol, RampShape};
use crate::spectral::CorrelationTime;
use crate::transfer::{DenominatorMode, DriveSpec, NuclearSpecies, SpeciesLabel};
use crate::units::{two_pi_ghz, two_pi_mhz};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(String),
    #[error("config is not valid JSON: {0}")]
    Parse(String),
    #[error("unknown configuration key '{0}'")]
    UnknownKey(String),
    #[error("configuration key '{key}': {reason}")]
    BadValue { key: String, reason: String },
}

/// 13C-1H pair parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    /// Scalar coupling, Hz.
    pub g_hz: f64,
    pub gamma_h_mhz_per_t: f64,
    pub gamma_c_mhz_per_t: f64,
}

impl Default for SampleSection {
    fn default() -> Self {
        Self {
            g_hz: 220.0,
            gamma_h_mhz_per_t: 42.577,
            gamma_c_mhz_per_t: 10.708,
        }
    }
}

/// NV ensemble parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NvSection {
    pub zfs_d_ghz: f64,
    pub strain_e_mhz: f64,
    pub gamma_e_ghz_per_t: f64,
    /// Optically pumped electron polarization inside the window.
    pub pe0: f64,
    /// Resonance window: |orientation detuning| below this, MHz.
    pub window_threshold_mhz: f64,
}

impl Default for NvSection {
    fn default() -> Self {
        Self {
            zfs_d_ghz: 2.87,
            strain_e_mhz: 20.0,
            gamma_e_ghz_per_t: 28.024,
            pe0: 0.125,
            window_threshold_mhz: 10.0,
        }
    }
}

/// Microwave drive at the 90-degree operating point.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub rabi_mhz: f64,
    pub detuning_mhz: f64,
}

impl Default for DriveSection {
    fn default() -> Self {
        let v = 8.0 * std::f64::consts::SQRT_2;
        Self {
            rabi_mhz: v,
            detuning_mhz: v,
        }
    }
}

/// Polarizing cell: field, noise correlation time, residence time, and the
/// calibrated transfer rate constant.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolarizerSection {
    pub field_t: f64,
    pub tau_c_ns: f64,
    pub t1_s: f64,
    /// Rate constant in 1/s; calibrated so the default pipeline reaches
    /// the target bulk 1H polarization.
    pub c0_rate: f64,
    /// NV electrons per nuclear pair spin.
    pub nv_to_nuclear: f64,
    pub quadrature_nodes: usize,
    pub mode: DenominatorMode,
}

impl Default for PolarizerSection {
    fn default() -> Self {
        Self {
            field_t: 0.36,
            tau_c_ns: 15.0,
            t1_s: 1.0,
            c0_rate: 56_251.089_351_408_43,
            nv_to_nuclear: 1.6e-6,
            quadrature_nodes: 256,
            mode: DenominatorMode::Corrected,
        }
    }
}

/// Field ramp of the conversion stage.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RampSection {
    pub b_high_t: f64,
    pub b_low_t: f64,
    pub t2_s: f64,
    pub shape: RampShape,
    /// Integration starts where the Zeeman difference is this multiple of g.
    pub start_field_factor: f64,
    pub convention: MapConvention,
}

impl Default for RampSection {
    fn default() -> Self {
        Self {
            b_high_t: 0.36,
            b_low_t: 1e-6,
            t2_s: 0.3,
            shape: RampShape::Exponential,
            start_field_factor: 100.0,
            convention: MapConvention::Eq8Consistent,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub sample: SampleSection,
    #[serde(default)]
    pub nv: NvSection,
    #[serde(default)]
    pub drive: DriveSection,
    #[serde(default)]
    pub polarizer: PolarizerSection,
    #[serde(default)]
    pub ramp: RampSection,
}

/// A fully resolved configuration: typed values, canonical JSON, content
/// hash, and which keys came from the user file.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub sha256: String,
    merged: Value,
    user_keys: Vec<String>,
}

fn merge_into(
    default: &mut Value,
    user: &Value,
    path: &str,
    user_keys: &mut Vec<String>,
) -> Result<(), ConfigError> {
    match (default, user) {
        (Value::Object(d), Value::Object(u)) => {
            for (k, v) in u {
                let child_path = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                match d.get_mut(k) {
                    Some(slot) => merge_into(slot, v, &child_path, user_keys)?,
                    None => return Err(ConfigError::UnknownKey(child_path)),
                }
            }
            Ok(())
        }
        (Value::Object(_), _) => Err(ConfigError::BadValue {
            key: path.to_string(),
            reason: "expected an object".into(),
        }),
        (slot, v) => {
            if v.is_object() {
                return Err(ConfigError::BadValue {
                    key: path.to_string(),
                    reason: "unexpected object".into(),
                });
            }
            *slot = v.clone();
            user_keys.push(path.to_string());
            Ok(())
        }
    }
}

impl LoadedConfig {
    /// Built-in defaults with no user file.
    pub fn defaults() -> Self {
        Self::from_user_value(Value::Object(Default::default())).expect("defaults are valid")
    }

    /// Load a config file over the defaults. An empty file means "all
    /// defaults".
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{path:?}: {e}")))?;
        let user: Value = if text.trim().is_empty() {
            Value::Object(Default::default())
        } else {
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?
        };
        Self::from_user_value(user)
    }

    pub fn from_user_value(user: Value) -> Result<Self, ConfigError> {
        if !user.is_object() {
            return Err(ConfigError::Parse("top level must be a JSON object".into()));
        }
        let mut merged = serde_json::to_value(RunConfig::default()).expect("serializable");
        let mut user_keys = Vec::new();
        merge_into(&mut merged, &user, "", &mut user_keys)?;
        let config: RunConfig =
            serde_json::from_value(merged.clone()).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let canonical = serde_json::to_string(&merged).expect("serializable");
        let sha256 = hex_digest(canonical.as_bytes());
        let loaded = Self {
            config,
            sha256,
            merged,
            user_keys,
        };
        loaded.validate()?;
        Ok(loaded)
    }

    /// Range checks with dotted key paths; domain constructors re-validate.
    fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.config;
        let positive = [
            ("sample.g_hz", c.sample.g_hz),
            ("sample.gamma_h_mhz_per_t", c.sample.gamma_h_mhz_per_t),
            ("sample.gamma_c_mhz_per_t", c.sample.gamma_c_mhz_per_t),
            ("nv.zfs_d_ghz", c.nv.zfs_d_ghz),
            ("nv.strain_e_mhz", c.nv.strain_e_mhz),
            ("nv.gamma_e_ghz_per_t", c.nv.gamma_e_ghz_per_t),
            ("nv.window_threshold_mhz", c.nv.window_threshold_mhz),
            ("drive.rabi_mhz", c.drive.rabi_mhz),
            ("polarizer.field_t", c.polarizer.field_t),
            ("polarizer.tau_c_ns", c.polarizer.tau_c_ns),
            ("polarizer.t1_s", c.polarizer.t1_s),
            ("ramp.b_high_t", c.ramp.b_high_t),
            ("ramp.b_low_t", c.ramp.b_low_t),
            ("ramp.t2_s", c.ramp.t2_s),
            ("ramp.start_field_factor", c.ramp.start_field_factor),
        ];
        for (key, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(ConfigError::BadValue {
                    key: key.into(),
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        let non_negative = [
            ("nv.pe0", c.nv.pe0),
            ("drive.detuning_mhz", c.drive.detuning_mhz),
            ("polarizer.c0_rate", c.polarizer.c0_rate),
            ("polarizer.nv_to_nuclear", c.polarizer.nv_to_nuclear),
        ];
        for (key, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return Err(ConfigError::BadValue {
                    key: key.into(),
                    reason: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        if c.nv.pe0 > 1.0 {
            return Err(ConfigError::BadValue {
                key: "nv.pe0".into(),
                reason: format!("polarization cannot exceed 1, got {}", c.nv.pe0),
            });
        }
        if c.ramp.b_low_t >= c.ramp.b_high_t {
            return Err(ConfigError::BadValue {
                key: "ramp.b_low_t".into(),
                reason: "must be below ramp.b_high_t".into(),
            });
        }
        if c.polarizer.quadrature_nodes == 0 {
            return Err(ConfigError::BadValue {
                key: "polarizer.quadrature_nodes".into(),
                reason: "must be at least 1".into(),
            });
        }
        // exercise the domain constructors so unit conversions fail early
        self.drive_spec().map_err(domain("drive"))?;
        self.nv_spec().map_err(domain("nv"))?;
        self.pair_spec().map_err(domain("sample"))?;
        self.ramp_protocol().map_err(domain("ramp"))?;
        self.tau_c().map_err(domain("polarizer.tau_c_ns"))?;
        Ok(())
    }

    /// Key/value listing with provenance, one line per key.
    pub fn audit_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        collect_leaves(&self.merged, "", &mut |path, v| {
            let origin = if self.user_keys.iter().any(|k| k == path) {
                "user"
            } else {
                "default"
            };
            lines.push(format!("{path} = {v} ({origin})"));
        });
        lines
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(&self.merged).expect("serializable")
    }

    // domain-object accessors

    pub fn drive_spec(&self) -> crate::error::Result<DriveSpec> {
        DriveSpec::new(
            two_pi_mhz(self.config.drive.rabi_mhz),
            two_pi_mhz(self.config.drive.detuning_mhz),
        )
    }

    pub fn nv_spec(&self) -> crate::error::Result<NvEnsembleSpec> {
        NvEnsembleSpec::new(
            two_pi_ghz(self.config.nv.zfs_d_ghz),
            two_pi_mhz(self.config.nv.strain_e_mhz),
            two_pi_ghz(self.config.nv.gamma_e_ghz_per_t),
            self.config.nv.pe0,
            WindowSpec::DetuningThreshold {
                threshold: two_pi_mhz(self.config.nv.window_threshold_mhz),
            },
        )
    }

    pub fn hydrogen(&self) -> crate::error::Result<NuclearSpecies> {
        NuclearSpecies::new(SpeciesLabel::H1, two_pi_mhz(self.config.sample.gamma_h_mhz_per_t))
    }

    pub fn carbon(&self) -> crate::error::Result<NuclearSpecies> {
        NuclearSpecies::new(SpeciesLabel::C13, two_pi_mhz(self.config.sample.gamma_c_mhz_per_t))
    }

    pub fn buildup_model(&self) -> crate::error::Result<BuildupModel> {
        Ok(BuildupModel {
            hydrogen: self.hydrogen()?,
            carbon: self.carbon()?,
            nv: self.nv_spec()?,
            drive: self.drive_spec()?,
            b: self.config.polarizer.field_t,
            nv_to_nuclear: self.config.polarizer.nv_to_nuclear,
            t1: self.config.polarizer.t1_s,
            quadrature_nodes: self.config.polarizer.quadrature_nodes,
        })
    }

    pub fn pair_spec(&self) -> crate::error::Result<PairHamiltonianSpec> {
        PairHamiltonianSpec::new(
            self.config.sample.g_hz,
            two_pi_mhz(self.config.sample.gamma_c_mhz_per_t),
            two_pi_mhz(self.config.sample.gamma_h_mhz_per_t),
            self.config.ramp.b_high_t,
        )
    }

    pub fn ramp_protocol(&self) -> crate::error::Result<RampProtocol> {
        RampProtocol::new(
            self.config.ramp.b_high_t,
            self.config.ramp.b_low_t,
            self.config.ramp.t2_s,
            self.config.ramp.shape,
        )
    }

    pub fn tau_c(&self) -> crate::error::Result<CorrelationTime> {
        CorrelationTime::new(self.config.polarizer.tau_c_ns * 1e-9)
    }
}

fn domain(key: &str) -> impl Fn(ModelError) -> ConfigError + '_ {
    move |e| ConfigError::BadValue {
        key: key.to_string(),
        reason: e.to_string(),
    }
}

fn collect_leaves(v: &Value, path: &str, f: &mut impl FnMut(&str, &Value)) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let child_path = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                collect_leaves(child, &child_path, f);
            }
        }
        leaf => f(path, leaf),
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}
