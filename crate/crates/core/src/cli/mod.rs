//! The `qtorus` command line.
//!
//! Exit status: 0 when a run completes (converged, or stopped at the iteration
//! limit), 1 for configuration, capacity or I/O errors, 2 when the iteration
//! hits a near resonance or, in strict mode, a failed condition check.

pub mod config;
pub mod output;
pub mod presets;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use crate::baselines::{integrated_angle, phase_drift, reference_integrate, PhaseState, System};
use crate::diagnostics::{resonant_measure_mc, FrequencyDomain};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::solver::{evaluate_solution, run_with, SolverState, Termination};

use config::{ExperimentConfig, ExperimentKind, Overrides};
use output::{drift_csv, history_csv, scan_csv, spectrum_csv, trajectory_csv, write_atomic, ScanRow};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_RESONANCE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "qtorus", version, about = "Quasi-periodic solutions by frequency-updated Newton iteration on a growing Fourier lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment from a TOML config (or a JSON config / run summary).
    Run {
        config: PathBuf,
        /// Output directory; overrides `outputs.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Run a built-in experiment.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// List the built-in experiments.
    List,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OverrideArgs {
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub strict_conditions: bool,
}

impl From<&OverrideArgs> for Overrides {
    fn from(a: &OverrideArgs) -> Self {
        Overrides {
            max_iter: a.max_iter,
            epsilon: a.epsilon,
            seed: a.seed,
            strict_conditions: a.strict_conditions,
        }
    }
}

pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NearResonance { .. } | Error::ConditionViolation(_) => EXIT_RESONANCE,
        _ => EXIT_CONFIG,
    }
}

/// Outcome of one experiment: exit status plus a one-line report.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: u8,
    pub message: String,
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    let code = match dispatch(&cli) {
        Ok(o) => {
            println!("{}", o.message);
            o.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    ExitCode::from(code)
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::List => Ok(Outcome {
            code: EXIT_OK,
            message: presets::list_presets().trim_end().to_string(),
        }),
        Command::Run { config, out, overrides } => {
            let mut cfg = ExperimentConfig::load(config)?;
            cfg.apply(&overrides.into())?;
            run_experiment(&cfg, out.as_deref())
        }
        Command::Preset { name, out, overrides } => {
            let mut cfg = presets::preset(name).ok_or_else(|| {
                let known: Vec<&str> = presets::PRESETS.iter().map(|p| p.0).collect();
                Error::config("preset", format!("unknown preset {name:?}; known: {}", known.join(", ")))
            })?;
            cfg.apply(&overrides.into())?;
            let dir = out.clone().unwrap_or_else(|| cfg.output_dir());
            prepare_dir(&dir)?;
            write_atomic(&dir.join("config.toml"), &cfg.to_toml_string()?)?;
            run_experiment(&cfg, Some(&dir))
        }
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

/// Runs one experiment and writes its artifacts into `out` (or the
/// configured directory).
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Outcome> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir());
    prepare_dir(&dir)?;
    let started = Instant::now();
    match cfg.kind {
        ExperimentKind::Solve => run_solve(cfg, &dir, started),
        ExperimentKind::HarmonicDrift => run_drift(cfg, &dir, started),
        ExperimentKind::ResonanceScan => run_scan(cfg, &dir, started),
    }
}

fn summary_base(cfg: &ExperimentConfig, started: Instant) -> serde_json::Map<String, serde_json::Value> {
    let mut m = serde_json::Map::new();
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("name".into(), json!(cfg.name));
    m.insert("config".into(), json!(cfg));
    m.insert("wall_clock_seconds".into(), json!(started.elapsed().as_secs_f64()));
    m
}

fn write_summary(dir: &Path, summary: serde_json::Map<String, serde_json::Value>) -> Result<()> {
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(summary)).map_err(|e| Error::Io(e.to_string()))?;
    write_atomic(&dir.join("summary.json"), &(text + "\n"))
}

fn run_solve(cfg: &ExperimentConfig, dir: &Path, started: Instant) -> Result<Outcome> {
    let h = cfg.hamiltonian()?;
    let solver_cfg = cfg.solver_config()?;
    let state = run_with(&h, &solver_cfg, Exec::default())?;

    write_atomic(&dir.join("history.csv"), &history_csv(&state))?;
    for rec in &state.history {
        write_atomic(&dir.join(format!("spectrum_r{}.csv", rec.r)), &spectrum_csv(&rec.zhat))?;
    }
    let trajectory_written = if cfg.outputs.emit_trajectories && !matches!(state.termination, Termination::Aborted(_)) {
        write_trajectory(cfg, &h, &state, dir)?;
        true
    } else {
        false
    };

    let (code, message, error) = match &state.termination {
        Termination::Converged => (EXIT_OK, format!("{}: converged at r = {}", cfg.name, state.r), None),
        Termination::MaxIterations => (
            EXIT_OK,
            format!("{}: stopped at max_iter = {} with residual {:e}", cfg.name, state.r, state.final_residual().unwrap_or(f64::NAN)),
            None,
        ),
        Termination::Aborted(e) => (exit_code_for(e), format!("{}: aborted at r = {}: {e}", cfg.name, state.r), Some(e.to_string())),
    };
    let mut summary = summary_base(cfg, started);
    summary.insert("termination".into(), json!({ "reason": state.termination.label(), "message": error }));
    summary.insert("final_omega".into(), json!(state.omega));
    summary.insert("final_residual".into(), json!(state.final_residual()));
    summary.insert("trajectory_written".into(), json!(trajectory_written));
    summary.insert("iterations".into(), json!(iteration_table(&state)));
    write_summary(dir, summary)?;
    Ok(Outcome { code, message })
}

fn iteration_table(state: &SolverState) -> Vec<serde_json::Value> {
    state
        .history
        .iter()
        .map(|rec| {
            json!({
                "r": rec.r,
                "N_r": rec.half_width,
                "omega": rec.omega,
                "omega_next": rec.omega_next,
                "residual_l2": rec.residual_l2,
                "step_l2": rec.step_l2,
                "support_size": rec.support_size,
                "log_inverse_norm": rec.log_inverse_norm(),
                "gevrey_sup": rec.gevrey_sup,
                "diagnostics": rec.diagnostics,
            })
        })
        .collect()
}

fn write_trajectory(cfg: &ExperimentConfig, h: &crate::hamiltonian::PolynomialHamiltonian, state: &SolverState, dir: &Path) -> Result<()> {
    let times = &cfg.outputs.trajectory_times;
    let solution: Vec<PhaseState> = times
        .iter()
        .map(|&t| {
            let (_, x, y) = evaluate_solution(&state.zhat, &state.omega, t);
            PhaseState::new(x, y, t)
        })
        .collect();
    let (_, x0, y0) = evaluate_solution(&state.zhat, &state.omega, 0.0);
    let reference = reference_integrate(&System::Polynomial(h.clone()), &PhaseState::new(x0, y0, 0.0), times, cfg.outputs.reference_dt)?;
    write_atomic(&dir.join("trajectory.csv"), &trajectory_csv(&solution, &reference))
}

fn run_drift(cfg: &ExperimentConfig, dir: &Path, started: Instant) -> Result<Outcome> {
    let drift = cfg.drift.as_ref().ok_or_else(|| Error::config("drift", "section required"))?;
    let mut records = Vec::new();
    let mut measured = Vec::new();
    for &h in &drift.h {
        let rec = phase_drift(h, drift.n_steps)?;
        let angle = integrated_angle(h, drift.n_steps)?;
        measured.push(json!({ "h": h, "measured_accumulated": angle - drift.n_steps as f64 * h }));
        records.push(rec);
    }
    write_atomic(&dir.join("drift.csv"), &drift_csv(&records))?;
    let mut summary = summary_base(cfg, started);
    summary.insert("termination".into(), json!({ "reason": "completed", "message": null }));
    summary.insert("records".into(), json!(records));
    summary.insert("measured".into(), json!(measured));
    write_summary(dir, summary)?;
    info!("wrote drift table for {} step sizes", records.len());
    Ok(Outcome {
        code: EXIT_OK,
        message: format!("{}: drift table for {} step sizes", cfg.name, records.len()),
    })
}

fn run_scan(cfg: &ExperimentConfig, dir: &Path, started: Instant) -> Result<Outcome> {
    let scan = cfg.scan.as_ref().ok_or_else(|| Error::config("scan", "section required"))?;
    let domain = FrequencyDomain::new(scan.lower.clone(), scan.upper.clone())?;
    let mut rows = Vec::new();
    for &m_box in &scan.m_box {
        for &tau in &scan.tau {
            let fraction = resonant_measure_mc(&domain, m_box, tau, scan.samples, scan.seed, Exec::default())?;
            rows.push(ScanRow {
                tau,
                m_box,
                samples: scan.samples,
                fraction,
                seed: scan.seed,
            });
        }
    }
    write_atomic(&dir.join("resonance_scan.csv"), &scan_csv(&rows))?;
    let mut summary = summary_base(cfg, started);
    summary.insert("termination".into(), json!({ "reason": "completed", "message": null }));
    summary.insert("rows".into(), json!(rows));
    write_summary(dir, summary)?;
    Ok(Outcome {
        code: EXIT_OK,
        message: format!("{}: {} scan rows", cfg.name, rows.len()),
    })
}
