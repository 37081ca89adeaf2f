//! Output commands: figure tables (CSV), the end-to-end pipeline summary
//! (JSON), the ramp adiabaticity audit, and rate-constant calibration.
//!
//! Every table starts with a reproducibility header: config hash, the
//! effective mode and convention, and the full key/value audit of the
//! configuration with provenance. Floats are written with 17 significant
//! digits so reruns are byte-identical.

use std::f64::consts::TAU;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::LoadedConfig;
use crate::error::{ModelError, Result};
use crate::nv_orientation::{detuning_profile, window_fraction, window_interval};
use crate::pair_dynamics::{
    adiabatic_map, eigenlevels, high_field_populations, landau_zener_estimate, propagate_ramp,
    singlet_order_closed_form, singlet_order_from_populations, MapConvention, PairHamiltonianSpec,
    RampProtocol, RampShape,
};
use crate::spectral::{spectral_density, CorrelationTime};
use crate::transfer::{species_frequencies, species_polarization, DenominatorMode};

/// Mode and convention after command-line overrides.
#[derive(Debug, Clone, Copy)]
pub struct Effective {
    pub mode: DenominatorMode,
    pub convention: MapConvention,
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(cfg: &LoadedConfig, eff: &Effective) -> String {
    let mut s = String::new();
    s.push_str(&format!("# config_sha256={}\n", cfg.sha256));
    s.push_str(&format!(
        "# mode={} convention={}\n",
        eff.mode.as_str(),
        eff.convention.as_str()
    ));
    for line in cfg.audit_lines() {
        s.push_str(&format!("# config {line}\n"));
    }
    s
}

fn write_table(path: &Path, header: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    let mut out = String::from(header);
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())?;
    Ok(path.to_path_buf())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |e: std::io::Error| ModelError::InvalidInput(format!("cannot write {path:?}: {e}"));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(bytes).map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect()
}

/// Spectral density versus frequency for several correlation times, with
/// the four operating-point frequencies quoted in the header.
pub fn fig_spectral(cfg: &LoadedConfig, eff: &Effective, out: &Path) -> Result<PathBuf> {
    let drive = cfg.drive_spec()?;
    let b = cfg.config.polarizer.field_t;
    let fh = species_frequencies(&cfg.hydrogen()?, b, &drive);
    let fc = species_frequencies(&cfg.carbon()?, b, &drive);
    let taus_ns = [1.0, 10.0, 100.0, 1000.0];
    let mut head = header(cfg, eff);
    head.push_str(&format!(
        "# markers_mhz omega0_h={} omega0_c={} omega2_c={} omega2_h={}\n",
        fmt(fh.omega_0.abs() / TAU / 1e6),
        fmt(fc.omega_0.abs() / TAU / 1e6),
        fmt(fc.omega_2 / TAU / 1e6),
        fmt(fh.omega_2 / TAU / 1e6),
    ));
    let mut rows = Vec::new();
    for k in 0..=500 {
        // first row is exactly zero frequency, where J = 1
        let f_mhz = 50.0 * k as f64 / 500.0;
        let omega = TAU * f_mhz * 1e6;
        let mut row = vec![fmt(f_mhz)];
        for t_ns in taus_ns {
            let tau = CorrelationTime::new(t_ns * 1e-9)?;
            row.push(fmt(spectral_density(omega, tau)?.value()));
        }
        rows.push(row);
    }
    write_table(
        &out.join("spectral.csv"),
        &head,
        &["freq_mhz", "j_tau_1ns", "j_tau_10ns", "j_tau_100ns", "j_tau_1000ns"],
        &rows,
    )
}

/// Steady-state transfer polarizations versus correlation time.
pub fn fig_transfer(cfg: &LoadedConfig, eff: &Effective, out: &Path) -> Result<PathBuf> {
    let drive = cfg.drive_spec()?;
    let b = cfg.config.polarizer.field_t;
    let h = cfg.hydrogen()?;
    let c = cfg.carbon()?;
    let mut rows = Vec::new();
    for tc in log_grid(1e-10, 1e-6, 241) {
        let tau = CorrelationTime::new(tc)?;
        let ph = species_polarization(&h, b, &drive, tau, eff.mode)?;
        let pc = species_polarization(&c, b, &drive, tau, eff.mode)?;
        rows.push(vec![
            fmt(tc),
            fmt(ph),
            fmt(pc),
            fmt(ph.abs()),
            fmt(pc.abs()),
            fmt(if pc != 0.0 { (ph / pc).abs() } else { f64::INFINITY }),
        ]);
    }
    write_table(
        &out.join("transfer.csv"),
        &header(cfg, eff),
        &["tau_c_s", "p_h", "p_c", "p_h_abs", "p_c_abs", "selectivity_h_over_c"],
        &rows,
    )
}

/// Transfer polarizations over the (correlation time, orientation detuning
/// offset) plane.
pub fn fig_contour(cfg: &LoadedConfig, eff: &Effective, out: &Path) -> Result<PathBuf> {
    let drive = cfg.drive_spec()?;
    let b = cfg.config.polarizer.field_t;
    let h = cfg.hydrogen()?;
    let c = cfg.carbon()?;
    let taus = log_grid(1e-9, 1e-6, 61);
    let dprimes: Vec<f64> = (0..=60).map(|k| -30.0 + k as f64).collect();
    let mut points = Vec::new();
    for &tc in &taus {
        for &dp in &dprimes {
            points.push((tc, dp));
        }
    }
    let rows: Result<Vec<Vec<String>>> = points
        .par_iter()
        .map(|&(tc, dp_mhz)| {
            let tau = CorrelationTime::new(tc)?;
            let local = drive.with_detuning(drive.detuning0() + TAU * dp_mhz * 1e6);
            let ph = species_polarization(&h, b, &local, tau, eff.mode)?;
            let pc = species_polarization(&c, b, &local, tau, eff.mode)?;
            Ok(vec![fmt(tc), fmt(dp_mhz), fmt(ph), fmt(pc)])
        })
        .collect();
    write_table(
        &out.join("contour.csv"),
        &header(cfg, eff),
        &["tau_c_s", "dprime_mhz", "p_h", "p_c"],
        &rows?,
    )
}

/// Bulk build-up polarizations versus correlation time.
pub fn fig_buildup(cfg: &LoadedConfig, eff: &Effective, out: &Path) -> Result<PathBuf> {
    let model = cfg.buildup_model()?;
    let grid = log_grid(1e-10, 1e-5, 121);
    let sweep = model.polarization_sweep(&grid, cfg.config.polarizer.c0_rate)?;
    let rows: Vec<Vec<String>> = sweep
        .iter()
        .map(|r| {
            vec![
                fmt(r.tau_c),
                fmt(r.p_h),
                fmt(r.p_c),
                (r.clamped as u8).to_string(),
            ]
        })
        .collect();
    write_table(
        &out.join("buildup.csv"),
        &header(cfg, eff),
        &["tau_c_s", "p_h_bulk", "p_c_bulk", "clamped"],
        &rows,
    )
}

/// Pair energy levels and singlet character across the ramp field range.
pub fn fig_levels(cfg: &LoadedConfig, eff: &Effective, out: &Path) -> Result<PathBuf> {
    let base = cfg.pair_spec()?;
    let mut rows = Vec::new();
    for b in log_grid(1e-7, 1.0, 281) {
        let levels = eigenlevels(&PairHamiltonianSpec { b, ..base });
        rows.push(vec![
            fmt(b),
            fmt(levels[0].energy_hz),
            fmt(levels[1].energy_hz),
            fmt(levels[2].energy_hz),
            fmt(levels[3].energy_hz),
            fmt(levels[0].singlet_character),
            fmt(levels[1].singlet_character),
        ]);
    }
    write_table(
        &out.join("levels.csv"),
        &header(cfg, eff),
        &[
            "b_t",
            "e_singlet_branch_hz",
            "e_t0_branch_hz",
            "e_tplus_hz",
            "e_tminus_hz",
            "singlet_char_lower",
            "singlet_char_upper",
        ],
        &rows,
    )
}

/// Full two-stage pipeline at the configured operating point.
pub fn pipeline(cfg: &LoadedConfig, eff: &Effective, out: &Path) -> Result<PathBuf> {
    let model = cfg.buildup_model()?;
    let tau = cfg.tau_c()?;
    let c0 = cfg.config.polarizer.c0_rate;
    let (p_h, clamp_h) = model.species_polarization(&model.hydrogen, tau, c0)?;
    let (p_c, clamp_c) = model.species_polarization(&model.carbon, tau, c0)?;
    let pair = crate::buildup::PolarizationPair::new(p_c, p_h)?;
    let pops = high_field_populations(&pair);
    let protocol = cfg.ramp_protocol()?;
    let spec = cfg.pair_spec()?;
    let outcome = propagate_ramp(&pops, &protocol, &spec, cfg.config.ramp.start_field_factor)?;
    let p_s = singlet_order_from_populations(&outcome.final_populations)?;
    let mapped = adiabatic_map(&pops, eff.convention)?;
    let p_s_map = singlet_order_from_populations(&mapped)?;
    let window = window_fraction(
        &cfg.nv_spec()?,
        cfg.config.polarizer.field_t,
        &cfg.drive_spec()?,
        &cfg.nv_spec()?.window,
    )?;
    let doc = serde_json::json!({
        "config_sha256": cfg.sha256,
        "mode": eff.mode.as_str(),
        "convention": eff.convention.as_str(),
        "window_solid_angle_fraction": window,
        "p_h_bulk": p_h,
        "p_c_bulk": p_c,
        "buildup_clamped": clamp_h || clamp_c,
        "p_s_ramp": p_s,
        "p_s_adiabatic_map": p_s_map,
        "p_s_closed_form": singlet_order_closed_form(&pair),
        "singlet_to_h_ratio": if p_h != 0.0 { p_s / p_h } else { f64::NAN },
        "diabatic_leakage": outcome.diabatic_leakage,
        "norm_defect": outcome.norm_defect,
        "ramp_start_field_t": outcome.start_field,
        "final_populations_singlet_triplet": outcome.final_populations.values(),
    });
    let path = out.join("pipeline.json");
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| ModelError::InvalidInput(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// Diabatic leakage and its closed-form estimate over ramp durations and
/// shapes.
pub fn adiabatic_audit(cfg: &LoadedConfig, eff: &Effective, out: &Path) -> Result<PathBuf> {
    let spec = cfg.pair_spec()?;
    let pops = high_field_populations(&crate::buildup::PolarizationPair::new(0.0, 0.0)?);
    let t2s = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1];
    let shapes = [RampShape::Linear, RampShape::Exponential, RampShape::Tanh];
    let mut cases = Vec::new();
    for &t2 in &t2s {
        for &shape in &shapes {
            cases.push((t2, shape));
        }
    }
    let rows: Result<Vec<Vec<String>>> = cases
        .par_iter()
        .map(|&(t2, shape)| {
            let protocol =
                RampProtocol::new(cfg.config.ramp.b_high_t, cfg.config.ramp.b_low_t, t2, shape)?;
            let outcome =
                propagate_ramp(&pops, &protocol, &spec, cfg.config.ramp.start_field_factor)?;
            let lz = landau_zener_estimate(&protocol, &spec)?;
            Ok(vec![
                fmt(t2),
                shape.as_str().to_string(),
                fmt(outcome.diabatic_leakage),
                fmt(lz),
                fmt(outcome.norm_defect),
            ])
        })
        .collect();
    write_table(
        &out.join("adiabatic_audit.csv"),
        &header(cfg, eff),
        &["t2_s", "shape", "leakage", "lz_estimate", "norm_defect"],
        &rows?,
    )
}

/// Solve for the rate constant that reaches `target_ph` and write the
/// updated configuration.
pub fn calibrate(
    cfg: &LoadedConfig,
    _eff: &Effective,
    out: &Path,
    target_ph: f64,
) -> Result<(PathBuf, f64)> {
    let model = cfg.buildup_model()?;
    let c0 = model.calibrate_c0(target_ph, cfg.tau_c()?)?;
    let mut value: serde_json::Value =
        serde_json::from_str(&cfg.canonical_json()).expect("round trip");
    value["polarizer"]["c0_rate"] = serde_json::json!(c0);
    let path = out.join("calibrated_config.json");
    let mut text = serde_json::to_string_pretty(&value).expect("serializable");
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    Ok((path, c0))
}

/// One-line textual summary of the resonance window, used by the CLI.
pub fn window_summary(cfg: &LoadedConfig) -> Result<String> {
    let spec = cfg.nv_spec()?;
    let drive = cfg.drive_spec()?;
    let b = cfg.config.polarizer.field_t;
    let (lo, hi) = window_interval(&spec, &drive, b)?;
    let frac = window_fraction(&spec, b, &drive, &spec.window)?;
    let (_, dp_edge) = detuning_profile(lo, &drive, &spec, b)?;
    Ok(format!(
        "window [{:.4}, {:.4}] deg, solid-angle fraction {:.6}, edge offset {:.3} MHz",
        lo.to_degrees(),
        hi.to_degrees(),
        frac,
        dp_edge / TAU / 1e6
    ))
}
