//! Experiment runner for the geometric PID library.
//!
//! Exit codes: 0 = ran and met its thresholds, 1 = usage/configuration
//! error, 2 = the simulation aborted or an artifact could not be written,
//! 3 = ran to completion but missed its convergence thresholds.

mod config;
mod output;

use clap::{Parser, Subcommand};
use config::{parse_config, BuiltRun};
use geopid::analysis::{convergence_report, default_params, feasible_beta_interval};
use geopid::analysis::{AnalysisError, ConvergenceThresholds};
use geopid::control::{Controller, ControllerKind, GainSet, PlantOrder};
use geopid::scenarios::{scenario, Scenario, SCENARIO_NAMES};
use geopid::sim::{simulate, Integrator, SimError};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "geopid", version, about = "PID control on SO(3)/SE(3) with transported integral action")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run described by a key=value config file.
    Run {
        config: PathBuf,
    },
    /// Execute one of the named studies (so3-first-order, so3-second-order,
    /// se3-first-order, se3-p-vs-pi, so3-crossed-pi).
    Reproduce {
        name: String,
        /// Directory for the CSV and summary files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Override the step size.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the horizon.
        #[arg(long)]
        t_final: Option<f64>,
        /// Override the integrator (lie_euler or rkmk4).
        #[arg(long)]
        integrator: Option<String>,
        /// Override the record stride.
        #[arg(long)]
        record_stride: Option<usize>,
        /// Swap the control law (must keep the plant order; single-run
        /// studies only).
        #[arg(long)]
        controller: Option<String>,
    },
    /// Print the feasible beta interval for second-order monitoring.
    CheckGains {
        #[arg(long)]
        kp: Option<f64>,
        #[arg(long)]
        ki: f64,
        #[arg(long)]
        kd: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Also report whether this beta lies inside the interval.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Run every *.cfg file in a directory concurrently.
    Sweep {
        config_dir: PathBuf,
    },
    /// Parse and validate a config file without running it.
    Validate {
        config: PathBuf,
        /// Print the config back in canonical form, defaults made explicit.
        #[arg(long)]
        canonical: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap reserves 2 for usage errors; this tool uses 2 for aborted
            // simulations, so usage problems map to 1 (help/version to 0)
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Reproduce { name, out_dir, dt, t_final, integrator, record_stride, controller } => {
            cmd_reproduce(&name, &out_dir, dt, t_final, integrator.as_deref(), record_stride, controller.as_deref())
        }
        Command::CheckGains { kp, ki, kd, gamma, beta } => cmd_check_gains(kp, ki, kd, gamma, beta),
        Command::Sweep { config_dir } => cmd_sweep(&config_dir),
        Command::Validate { config, canonical } => cmd_validate(&config, canonical),
    };
    ExitCode::from(code)
}

fn load(path: &Path) -> Result<BuiltRun, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let spec = parse_config(&text)?;
    spec.build()
}

/// Run a built config, write its artifacts, and report. Returns the exit
/// code contribution (0 converged / 2 aborted / 3 thresholds unmet).
fn execute(
    label: &str,
    built: &BuiltRun,
    csv_path: &Path,
    summary_path: &Path,
    expect_convergence: bool,
) -> u8 {
    for note in built.config.diagnostics() {
        eprintln!("note: {note}");
    }
    let traj = match simulate(&built.config) {
        Ok(traj) => traj,
        Err(e @ SimError::NonFiniteState { .. }) => {
            eprintln!("{label}: {e}");
            return 2;
        }
        Err(e) => {
            eprintln!("{label}: {e}");
            return 1;
        }
    };
    let report = convergence_report(&traj, built.thresholds);
    let summary = output::summary_value(Some(label), &traj, &report);
    if let Err(e) = output::write_csv(&traj, csv_path) {
        eprintln!("{label}: {e}");
        return 2;
    }
    if let Err(e) = output::write_summary(&summary, summary_path) {
        eprintln!("{label}: {e}");
        return 2;
    }
    println!(
        "{label}: {} at t = {} (phi = {:.3e}, residual = {:.3e}) -> {}",
        if report.converged { "converged" } else { "did not converge" },
        report.final_time,
        report.final_phi,
        report.final_residual,
        csv_path.display(),
    );
    if report.converged == expect_convergence || report.converged {
        0
    } else {
        3
    }
}

fn cmd_run(path: &Path) -> u8 {
    let built = match load(path) {
        Ok(built) => built,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return 1;
        }
    };
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    let csv = PathBuf::from(&built.output_csv);
    let summary = PathBuf::from(&built.output_summary);
    execute(&label, &built, &csv, &summary, true)
}

fn parse_kind(name: &str) -> Result<ControllerKind, String> {
    Ok(match name {
        "p" => ControllerKind::P,
        "pd" => ControllerKind::Pd,
        "pi" => ControllerKind::Pi,
        "pid" => ControllerKind::Pid,
        "crossed-pi" => ControllerKind::CrossedPi,
        "crossed-pid" => ControllerKind::CrossedPid,
        other => return Err(format!("unknown controller '{other}'")),
    })
}

/// Rebuild a scenario run around a different law of the same plant order,
/// dropping gains the new law does not read and re-deriving the monitoring
/// weights.
fn swap_controller(run: &mut Scenario, kind: ControllerKind) -> Result<(), String> {
    let old = &run.config.controller;
    if kind.order() != old.order() {
        return Err(format!(
            "--controller {} would change the plant order; pick a law of the same order",
            kind.name()
        ));
    }
    let g = old.gains;
    let k_i = if kind.uses_integral() { g.k_i } else { 0.0 };
    let k_d = match kind.order() {
        PlantOrder::First => 0.0,
        PlantOrder::Second => g.k_d,
    };
    let gains = GainSet::new(g.k_p, k_d, k_i).map_err(|e| e.to_string())?;
    let controller = Controller::new(kind, gains, old.error_fn).map_err(|e| e.to_string())?;
    run.config.lyapunov = match default_params(&gains, kind.order()) {
        Ok(p) => p,
        Err(AnalysisError::ZeroIntegralGain) => {
            let gamma = matches!(kind.order(), PlantOrder::Second).then_some(1.0);
            geopid::analysis::LyapunovParams::new(gains.k_p, 1.0, gamma)
                .map_err(|e| e.to_string())?
        }
        Err(e) => return Err(e.to_string()),
    };
    run.config.controller = controller;
    run.thresholds = if kind.is_crossed() && kind.order() == PlantOrder::First {
        ConvergenceThresholds::for_crossed_first_order()
    } else {
        ConvergenceThresholds::default()
    };
    run.name = format!("{}-{}", run.name, kind.name());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_reproduce(
    name: &str,
    out_dir: &Path,
    dt: Option<f64>,
    t_final: Option<f64>,
    integrator: Option<&str>,
    record_stride: Option<usize>,
    controller: Option<&str>,
) -> u8 {
    let Some(mut runs) = scenario(name) else {
        eprintln!("unknown study '{name}'; available: {}", SCENARIO_NAMES.join(", "));
        return 1;
    };
    if let Some(kind_name) = controller {
        if runs.len() != 1 {
            eprintln!("--controller applies to single-run studies only");
            return 1;
        }
        let kind = match parse_kind(kind_name) {
            Ok(kind) => kind,
            Err(e) => {
                eprintln!("{e}");
                return 1;
            }
        };
        if let Err(e) = swap_controller(&mut runs[0], kind) {
            eprintln!("{e}");
            return 1;
        }
    }
    let integrator = match integrator {
        None => None,
        Some("lie_euler") => Some(Integrator::LieEuler),
        Some("rkmk4") => Some(Integrator::Rkmk4),
        Some(other) => {
            eprintln!("unknown integrator '{other}' (lie_euler or rkmk4)");
            return 1;
        }
    };
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        eprintln!("cannot create {}: {e}", out_dir.display());
        return 2;
    }
    let mut worst = 0u8;
    for mut run in runs {
        if let Some(dt) = dt {
            run.config.dt = dt;
        }
        if let Some(t_final) = t_final {
            run.config.t_final = t_final;
        }
        if let Some(integrator) = integrator {
            run.config.integrator = integrator;
        }
        if let Some(stride) = record_stride {
            run.config.record_stride = stride;
        }
        if let Err(e) = run.config.validate() {
            eprintln!("{}: {e}", run.name);
            return 1;
        }
        let built = BuiltRun {
            config: run.config,
            thresholds: run.thresholds,
            output_csv: String::new(),
            output_summary: String::new(),
        };
        let csv = out_dir.join(format!("{}.csv", run.name));
        let summary = out_dir.join(format!("{}-summary.json", run.name));
        let code = execute(&run.name, &built, &csv, &summary, run.expect_convergence);
        worst = worst.max(code);
    }
    worst
}

fn cmd_check_gains(kp: Option<f64>, ki: f64, kd: f64, gamma: f64, beta: Option<f64>) -> u8 {
    match feasible_beta_interval(kd, ki, gamma) {
        None => {
            println!(
                "no feasible beta for k_d = {kd}, k_i = {ki}, gamma = {gamma}: \
                 second-order integral action requires 0 < k_i < k_d"
            );
        }
        Some((lo, hi)) => {
            println!("feasible beta interval for k_d = {kd}, k_i = {ki}, gamma = {gamma}:");
            println!("  ({lo:.15e}, {hi:.15e})");
            let mid = (lo * hi).sqrt();
            println!("  log-midpoint beta = {mid:.15e}");
            if let Some(kp) = kp {
                println!("  with k_p = {kp}: alpha = beta k_p = {:.15e}", mid * kp);
            }
            if let Some(beta) = beta {
                let verdict = if lo < beta && beta < hi { "inside" } else { "outside" };
                println!("  beta = {beta} lies {verdict} the interval");
            }
        }
    }
    0
}

fn cmd_sweep(dir: &Path) -> u8 {
    let entries = match std::fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) => {
            eprintln!("cannot read {}: {e}", dir.display());
            return 1;
        }
    };
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "cfg"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        eprintln!("no .cfg files in {}", dir.display());
        return 1;
    }
    let results: Vec<(PathBuf, u8)> = std::thread::scope(|scope| {
        let handles: Vec<_> = paths
            .iter()
            .map(|path| scope.spawn(move || (path.clone(), cmd_run(path))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
    });
    let mut worst = 0u8;
    for (path, code) in results {
        println!("{}: exit {code}", path.display());
        worst = worst.max(code);
    }
    worst
}

fn cmd_validate(path: &Path, canonical: bool) -> u8 {
    let outcome = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))
        .and_then(|text| parse_config(&text))
        .and_then(|spec| spec.build().map(|built| (spec, built)));
    match outcome {
        Ok((spec, built)) => {
            if canonical {
                print!("{}", config::serialize(&spec));
                return 0;
            }
            let config = &built.config;
            println!(
                "ok: {} {} on {:?}, {} steps of dt = {} ({} s), bias |b| = {:.3e}",
                config.controller.kind.name(),
                match config.controller.order() {
                    PlantOrder::First => "(first order)",
                    PlantOrder::Second => "(second order)",
                },
                config.controller.group(),
                config.n_steps(),
                config.dt,
                config.t_final,
                config.bias.vector.norm(),
            );
            for note in config.diagnostics() {
                println!("note: {note}");
            }
            0
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            1
        }
    }
}
