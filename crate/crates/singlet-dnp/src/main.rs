//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for configuration problems, 3 for numerical
//! or runtime failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use singlet_dnp::config::LoadedConfig;
use singlet_dnp::error::ModelError;
use singlet_dnp::figures::{self, Effective};
use singlet_dnp::pair_dynamics::MapConvention;
use singlet_dnp::transfer::DenominatorMode;

#[derive(Parser)]
#[command(name = "singlet-dnp", version, about = "Two-stage hyperpolarization pipeline model")]
struct Cli {
    /// JSON configuration file; omitted means built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for tables and summaries.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Steady-state denominator closure: as_written or corrected.
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<DenominatorMode>,

    /// Zero-quantum relabeling convention of the adiabatic map:
    /// eq6_as_printed or eq8_consistent.
    #[arg(long, global = true, value_parser = parse_convention)]
    convention: Option<MapConvention>,

    /// Worker threads for the sweep commands; default lets the runtime pick.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral density versus frequency for several correlation times.
    FigSpectral,
    /// Steady-state transfer polarizations versus correlation time.
    FigTransfer,
    /// Transfer polarizations over the correlation-time x detuning plane.
    FigContour,
    /// Bulk polarization build-up versus correlation time.
    FigBuildup,
    /// Pair energy levels and singlet character versus field.
    FigLevels,
    /// End-to-end pipeline summary at the configured operating point.
    Pipeline,
    /// Ramp leakage versus duration and shape, with closed-form estimates.
    AdiabaticAudit,
    /// Solve for the rate constant reaching the target polarization.
    Calibrate {
        /// Target bulk 1H polarization.
        #[arg(long, default_value_t = 0.006)]
        target_ph: f64,
    },
}

fn parse_mode(s: &str) -> Result<DenominatorMode, String> {
    s.parse()
}

fn parse_convention(s: &str) -> Result<MapConvention, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(3);
        }
    }

    let loaded = match &cli.config {
        Some(path) => match LoadedConfig::load(path) {
            Ok(l) => l,
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(2);
            }
        },
        None => LoadedConfig::defaults(),
    };

    let eff = Effective {
        mode: cli.mode.unwrap_or(loaded.config.polarizer.mode),
        convention: cli.convention.unwrap_or(loaded.config.ramp.convention),
    };

    let result: Result<String, ModelError> = match cli.command {
        Command::FigSpectral => {
            figures::fig_spectral(&loaded, &eff, &cli.out).map(|p| format!("wrote {}", p.display()))
        }
        Command::FigTransfer => {
            figures::fig_transfer(&loaded, &eff, &cli.out).map(|p| format!("wrote {}", p.display()))
        }
        Command::FigContour => {
            figures::fig_contour(&loaded, &eff, &cli.out).map(|p| format!("wrote {}", p.display()))
        }
        Command::FigBuildup => {
            figures::fig_buildup(&loaded, &eff, &cli.out).map(|p| format!("wrote {}", p.display()))
        }
        Command::FigLevels => {
            figures::fig_levels(&loaded, &eff, &cli.out).map(|p| format!("wrote {}", p.display()))
        }
        Command::Pipeline => figures::pipeline(&loaded, &eff, &cli.out).map(|p| {
            let window = figures::window_summary(&loaded).unwrap_or_default();
            format!("wrote {}\n{window}", p.display())
        }),
        Command::AdiabaticAudit => figures::adiabatic_audit(&loaded, &eff, &cli.out)
            .map(|p| format!("wrote {}", p.display())),
        Command::Calibrate { target_ph } => figures::calibrate(&loaded, &eff, &cli.out, target_ph)
            .map(|(p, c0)| format!("c0_rate = {c0:.16e}\nwrote {}", p.display())),
    };

    match result {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
