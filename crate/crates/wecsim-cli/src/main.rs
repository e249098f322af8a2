//! Command-line front end: config ingestion, pipeline orchestration, and
//! CSV/JSON report emission.
//!
//! Exit codes: 0 success, 2 validation error (config, arguments, I/O),
//! 3 solver error. Diagnostics go to stderr as single-line JSON records.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wecsim::error::WecError;
use wecsim::geometry::MachineConfig;
use wecsim::optimizer::SweepSpec;
use wecsim::report::{self, Analysis, RunManifest};

#[derive(Parser)]
#[command(name = "wecsim", version, about = "NI HTS tubular wave energy converter design toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for parallel evaluation (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct Common {
    /// Machine config (TOML). Defaults to the embedded reference design.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory. Overridable with WECSIM_OUT.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Transient run: EMF, rectifier, metrics.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Analysed wave cycles (one extra start-up cycle is discarded).
        #[arg(long, default_value_t = 3)]
        cycles: usize,
    },
    /// Magnet load line and current margin.
    Loadline {
        #[command(flatten)]
        common: Common,
    },
    /// Fixed-tape-length design sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sweep grid spec (TOML).
        #[arg(long = "sweep-spec")]
        sweep_spec: PathBuf,
    },
    /// Coolant mass and enthalpy stability margin.
    Cryo {
        #[command(flatten)]
        common: Common,
    },
    /// Per-turn Lorentz stress estimates.
    Stress {
        #[command(flatten)]
        common: Common,
    },
    /// Merged multiphysics summary.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // worker count must not change any output byte; it only sets the pool size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let class = error_class(&e);
            eprintln!(
                "{}",
                serde_json::json!({ "error": e.to_string(), "class": class })
            );
            ExitCode::from(if class == "validation" { 2 } else { 3 })
        }
    }
}

fn error_class(e: &WecError) -> &'static str {
    match e {
        WecError::Config(_)
        | WecError::InvalidGeometry(_)
        | WecError::Io(_)
        | WecError::TableRange { .. }
        | WecError::TemperatureRange { .. }
        | WecError::WindowTooShort { .. } => "validation",
        WecError::SingularPoint { .. }
        | WecError::LoadLineNoConvergence { .. }
        | WecError::NegativeMargin { .. }
        | WecError::StateMachine { .. }
        | WecError::DegenerateSpectrum
        | WecError::EmptyFeasibleSet => "solver",
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<(MachineConfig, String, String), WecError> {
    match path {
        Some(p) => {
            let body = std::fs::read_to_string(p).map_err(|e| {
                WecError::Config(format!("cannot read config {}: {e}", p.display()))
            })?;
            Ok((wecsim::config::parse_toml(&body)?, body, p.display().to_string()))
        }
        None => {
            let body = wecsim::config::REFERENCE_TOML.to_string();
            Ok((wecsim::config::parse_toml(&body)?, body, "<embedded reference>".into()))
        }
    }
}

fn out_dir(requested: &Path) -> PathBuf {
    match std::env::var_os("WECSIM_OUT") {
        Some(v) => PathBuf::from(v),
        None => requested.to_path_buf(),
    }
}

fn run(cmd: Command) -> Result<(), WecError> {
    match cmd {
        Command::Simulate { common, cycles } => {
            if cycles == 0 {
                return Err(WecError::Config("--cycles must be at least 1".into()));
            }
            let (machine, body, path) = load_config(&common.config)?;
            let out = out_dir(&common.out);
            std::fs::create_dir_all(&out)?;
            RunManifest::new("simulate", &path, &out, &body).write(&out)?;
            let metrics = report::cmd_simulate(&machine, cycles, &out)?;
            println!(
                "P_out {:.3} kW, Vrms_out {:.2} V, PF {:.3}, efficiency {:.1} %",
                metrics.power_out_kw, metrics.vrms_out_v, metrics.power_factor, metrics.efficiency_pct
            );
            Ok(())
        }
        Command::Loadline { common } => {
            let (machine, body, path) = load_config(&common.config)?;
            let out = out_dir(&common.out);
            std::fs::create_dir_all(&out)?;
            RunManifest::new("loadline", &path, &out, &body).write(&out)?;
            let analysis = Analysis::new(machine)?;
            let r = report::cmd_loadline(&analysis, &out)?;
            println!(
                "Ic {:.2} A, margin {:.2} A ({:.1} %){}",
                r.critical_current_a,
                r.margin_a,
                r.margin_pct,
                if r.margin_negative { " NEGATIVE MARGIN" } else { "" }
            );
            Ok(())
        }
        Command::Sweep { common, sweep_spec } => {
            let (machine, body, path) = load_config(&common.config)?;
            let spec_body = std::fs::read_to_string(&sweep_spec).map_err(|e| {
                WecError::Config(format!("cannot read sweep spec {}: {e}", sweep_spec.display()))
            })?;
            let spec: SweepSpec = toml::from_str(&spec_body)
                .map_err(|e| WecError::Config(format!("sweep spec parse error: {e}")))?;
            spec.validate()?;
            let out = out_dir(&common.out);
            std::fs::create_dir_all(&out)?;
            RunManifest::new("sweep", &path, &out, &body).write(&out)?;
            let report = report::cmd_sweep(&machine, &spec, &out)?;
            let best = &report.rows[report.argmax_proxy];
            println!(
                "{} candidates, argmax {} mm x {} mm",
                report.rows.len(),
                best.height_mm,
                best.width_mm
            );
            Ok(())
        }
        Command::Cryo { common } => {
            let (machine, body, path) = load_config(&common.config)?;
            let out = out_dir(&common.out);
            std::fs::create_dir_all(&out)?;
            RunManifest::new("cryo", &path, &out, &body).write(&out)?;
            let analysis = Analysis::new(machine)?;
            let r = report::cmd_cryo(&analysis, &out)?;
            println!(
                "coolant {:.2} kg for {:.1} kg of magnet, T_cs {:.2} K, margin {:.3e} J/m^3",
                r.coolant_mass_kg, r.magnet_mass_kg, r.current_sharing_temperature_k, r.stability_margin_j_per_m3
            );
            Ok(())
        }
        Command::Stress { common } => {
            let (machine, body, path) = load_config(&common.config)?;
            let out = out_dir(&common.out);
            std::fs::create_dir_all(&out)?;
            RunManifest::new("stress", &path, &out, &body).write(&out)?;
            let analysis = Analysis::new(machine)?;
            let map = report::cmd_stress(&analysis, &out)?;
            println!(
                "hoop stress max {:.2} MPa, mean {:.2} MPa",
                map.max_hoop_pa / 1e6,
                map.mean_hoop_pa / 1e6
            );
            Ok(())
        }
        Command::Report { common } => {
            let (machine, body, path) = load_config(&common.config)?;
            let out = out_dir(&common.out);
            std::fs::create_dir_all(&out)?;
            RunManifest::new("report", &path, &out, &body).write(&out)?;
            let analysis = Analysis::new(machine)?;
            let s = report::cmd_report(&analysis, &out)?;
            println!(
                "B max {:.2} T, Ic {:.1} A, margin {:.1} A, stress max {:.1} MPa, coolant {:.2} kg",
                s.max_flux_density_t, s.critical_current_a, s.current_margin_a, s.max_stress_mpa, s.coolant_mass_kg
            );
            Ok(())
        }
    }
}
