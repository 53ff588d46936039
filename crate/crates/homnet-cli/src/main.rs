//! Command-line front end: run scenario presets or JSON configs, verify the
//! golden exit vectors and the six-line evolution matrices, and sweep rail
//! phases for plot data.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or parse error.
//! `HOMNET_EPS_NORM` and `HOMNET_EPS_RESIDUAL` override the run tolerances.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use homnet::elements::PhasePreset;
use homnet::engine::RunOptions;
use homnet::scenario::{
    execute, preset, preset_catalog, report, sweep_point, verify_evolution, verify_golden,
    verify_representation_equivalence, with_rail_phase, ScenarioConfig, SweepRail,
};

#[derive(Parser)]
#[command(
    name = "homnet",
    version,
    about = "Two-photon interference in chains of four-port Grover couplers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (a preset name or a JSON config path) and print the
    /// exit report.
    Run {
        #[arg(long)]
        scenario: String,
        /// Override the config's step cap.
        #[arg(long)]
        max_steps: Option<u32>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenario presets.
    List,
    /// Re-run every golden scenario and compare exit amplitudes.
    VerifyGolden,
    /// Structural and engine-equivalence checks on the six-line evolution
    /// matrices.
    VerifyEvolution {
        /// Comma-separated phase presets (0, 2, 6, 26); defaults to all.
        #[arg(long = "j", value_delimiter = ',')]
        j: Vec<String>,
    },
    /// Sweep one rail phase over [0, 2pi] and emit exit probabilities per
    /// point.
    SweepPhases {
        #[arg(long)]
        scenario: String,
        /// One of: left-upper, left-lower, right-upper, right-lower,
        /// inter-upper, inter-lower.
        #[arg(long)]
        rail: String,
        /// Number of intervals; the sweep emits steps + 1 points.
        #[arg(long)]
        steps: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Outcome {
    Success,
    VerificationFailed,
}

/// A usage or parse problem; maps to exit code 2.
struct UsageError(String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

fn main() -> ExitCode {
    // die quietly when the consumer closes the pipe (e.g. `homnet list | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(1),
        Err(UsageError(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<Outcome, UsageError> {
    match cli.command {
        Command::Run { scenario, max_steps, format, out } => {
            run_command(&scenario, max_steps, format, out)
        }
        Command::List => {
            for (name, description, _) in preset_catalog() {
                println!("{name:40} {description}");
            }
            Ok(Outcome::Success)
        }
        Command::VerifyGolden => {
            let mut all_ok = true;
            for outcome in verify_golden().map_err(UsageError::from)? {
                let verdict = if outcome.pass { "pass" } else { "FAIL" };
                println!("{verdict}  {:44} {}", outcome.id, outcome.detail);
                all_ok &= outcome.pass;
            }
            Ok(if all_ok { Outcome::Success } else { Outcome::VerificationFailed })
        }
        Command::VerifyEvolution { j } => verify_evolution_command(&j),
        Command::SweepPhases { scenario, rail, steps, out } => {
            sweep_command(&scenario, &rail, steps, out)
        }
    }
}

/// Resolve a preset name or load a config file.
fn load_scenario(spec: &str) -> Result<(String, ScenarioConfig), UsageError> {
    if let Some(config) = preset(spec) {
        return Ok((spec.to_string(), config));
    }
    let path = PathBuf::from(spec);
    if !path.exists() {
        return Err(UsageError(format!(
            "unknown scenario '{spec}' (not a preset; see `homnet list`) and no such file"
        )));
    }
    let text = std::fs::read_to_string(&path)?;
    let config: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok((name, config))
}

fn env_f64(name: &str) -> Option<f64> {
    std::env::var(name).ok()?.parse::<f64>().ok().filter(|v| v.is_finite() && *v >= 0.0)
}

fn run_options(config: &ScenarioConfig, max_steps: Option<u32>) -> RunOptions {
    let defaults = RunOptions::default();
    RunOptions {
        max_steps: max_steps.unwrap_or(config.max_steps),
        eps_norm: env_f64("HOMNET_EPS_NORM").unwrap_or(defaults.eps_norm),
        eps_residual: env_f64("HOMNET_EPS_RESIDUAL").unwrap_or(defaults.eps_residual),
    }
}

fn emit(text: String, out: Option<PathBuf>) -> Result<(), UsageError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(UsageError::from),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run_command(
    scenario: &str,
    max_steps: Option<u32>,
    format: Format,
    out: Option<PathBuf>,
) -> Result<Outcome, UsageError> {
    let (name, config) = load_scenario(scenario)?;
    let opts = run_options(&config, max_steps);
    let summary = execute(&config, &opts).map_err(UsageError::from)?;
    let value = report(&name, &summary).map_err(UsageError::from)?;
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&value)?,
        Format::Table => render_table(&value),
    };
    emit(text, out)?;
    Ok(Outcome::Success)
}

fn render_table(value: &Value) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", value["scenario"].as_str().unwrap_or("?"));
    let _ =
        writeln!(out, "{:<8} {:>8} {:>10}  amplitude", "port", "time_bin", "occupation");
    for entry in value["exits"].as_array().into_iter().flatten() {
        let amp = entry["amplitude"].as_array().unwrap();
        let _ = writeln!(
            out,
            "{:<8} {:>8} {:>10}  {:>15.12} {:+.12}i",
            entry["port"].as_str().unwrap_or("?"),
            entry["time_bin"].as_u64().unwrap_or(0),
            entry["occupation"].as_u64().unwrap_or(0),
            amp[0].as_f64().unwrap_or(0.0),
            amp[1].as_f64().unwrap_or(0.0),
        );
    }
    let _ = writeln!(out, "{:<28} {:>12}", "ket", "probability");
    for ket in value["kets"].as_array().into_iter().flatten() {
        let _ = writeln!(
            out,
            "{:<28} {:>12.6}",
            ket["label"].as_str().unwrap_or("?"),
            ket["probability"].as_f64().unwrap_or(0.0),
        );
    }
    let _ = write!(out, "residual_norm: {}", value["residual_norm"]);
    out
}

fn verify_evolution_command(j: &[String]) -> Result<Outcome, UsageError> {
    let presets: Vec<PhasePreset> = if j.is_empty() {
        PhasePreset::ALL.to_vec()
    } else {
        j.iter()
            .map(|s| {
                PhasePreset::parse(s).ok_or_else(|| {
                    UsageError(format!("unknown phase preset '{s}' (expected 0, 2, 6, or 26)"))
                })
            })
            .collect::<Result<_, _>>()?
    };

    let mut all_ok = true;
    for outcome in verify_evolution(&presets) {
        let verdict = if outcome.pass() { "pass" } else { "FAIL" };
        println!("{verdict}  {:4} {}", outcome.preset.label(), outcome.detail);
        all_ok &= outcome.pass();
    }
    for outcome in verify_representation_equivalence().map_err(UsageError::from)? {
        let verdict = if outcome.pass { "pass" } else { "FAIL" };
        println!(
            "{verdict}  engine equivalence {:44} max deviation {:.2e}",
            outcome.name, outcome.max_deviation
        );
        all_ok &= outcome.pass;
    }
    Ok(if all_ok { Outcome::Success } else { Outcome::VerificationFailed })
}

fn sweep_command(
    scenario: &str,
    rail: &str,
    steps: u32,
    out: Option<PathBuf>,
) -> Result<Outcome, UsageError> {
    let (name, config) = load_scenario(scenario)?;
    let rail = SweepRail::parse(rail)
        .ok_or_else(|| UsageError(format!("unknown rail '{rail}'")))?;
    if steps == 0 {
        return Err(UsageError("--steps must be at least 1".into()));
    }
    let phis: Vec<f64> = (0..=steps)
        .map(|k| std::f64::consts::TAU * k as f64 / steps as f64)
        .collect();
    let points: Result<Vec<Value>, String> = phis
        .par_iter()
        .map(|&phi| {
            let cfg = with_rail_phase(&config, rail, phi).map_err(|e| e.to_string())?;
            sweep_point(&cfg, phi).map_err(|e| e.to_string())
        })
        .collect();
    let value = json!({
        "scenario": name,
        "rail": rail.label(),
        "points": points.map_err(UsageError)?,
    });
    emit(serde_json::to_string_pretty(&value)?, out)?;
    Ok(Outcome::Success)
}
