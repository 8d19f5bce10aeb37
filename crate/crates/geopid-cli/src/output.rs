//! Trajectory serialization: a fixed-column CSV and a JSON summary.

use geopid::analysis::ConvergenceReport;
use geopid::control::PlantOrder;
use geopid::sim::{Integrator, Trajectory};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Column layout: `t, phi, V, grad_norm, xi_norm, integral_1..integral_d,
/// residual_norm`. The `xi_norm` field is left empty on first-order runs.
/// All numbers carry 17 significant digits, enough to reproduce the exact
/// f64 values.
pub fn csv_text(traj: &Trajectory) -> String {
    let d = traj.config.controller.group().dim();
    let mut out = String::new();
    out.push_str("t,phi,V,grad_norm,xi_norm");
    for i in 1..=d {
        let _ = write!(out, ",integral_{i}");
    }
    out.push_str(",residual_norm\n");
    for rec in &traj.records {
        let _ = write!(out, "{:.16e},{:.16e},{:.16e},{:.16e},", rec.t, rec.phi, rec.v, rec.grad_norm);
        if let Some(xi) = rec.xi {
            let _ = write!(out, "{:.16e}", xi.norm());
        }
        for value in rec.integral.coords() {
            let _ = write!(out, ",{value:.16e}");
        }
        let _ = writeln!(out, ",{:.16e}", rec.residual_norm);
    }
    out
}

pub fn write_csv(traj: &Trajectory, path: &Path) -> Result<(), String> {
    fs::write(path, csv_text(traj))
        .map_err(|e| format!("cannot write CSV to {}: {e}", path.display()))
}

/// The convergence report plus the monitoring parameters the run used.
pub fn summary_value(name: Option<&str>, traj: &Trajectory, report: &ConvergenceReport) -> Value {
    let lyap = &traj.config.lyapunov;
    json!({
        "name": name,
        "group": format!("{:?}", traj.config.controller.group()).to_lowercase(),
        "controller": traj.config.controller.kind.name(),
        "order": match traj.config.controller.order() {
            PlantOrder::First => 1,
            PlantOrder::Second => 2,
        },
        "dt": traj.config.dt,
        "t_final": traj.config.t_final,
        "integrator": match traj.config.integrator {
            Integrator::LieEuler => "lie_euler",
            Integrator::Rkmk4 => "rkmk4",
        },
        "lyapunov": {
            "alpha": lyap.alpha,
            "beta": lyap.beta,
            "gamma": lyap.gamma,
        },
        "thresholds": {
            "phi": report.thresholds.phi,
            "residual": report.thresholds.residual,
        },
        "final_time": report.final_time,
        "final_phi": report.final_phi,
        "final_grad_norm": report.final_grad_norm,
        "final_residual": report.final_residual,
        "final_xi_norm": report.final_xi_norm,
        "max_step_v_rise": report.max_step_v_rise,
        "max_step_v_rise_time": report.max_step_v_rise_time,
        "time_to_residual_below": report.time_to_residual_below,
        "neared_critical_set": report.neared_critical_set,
        "converged": report.converged,
        "diagnostics": traj.diagnostics,
    })
}

pub fn write_summary(value: &Value, path: &Path) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| format!("cannot serialize summary: {e}"))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| format!("cannot write summary to {}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use geopid::analysis::{convergence_report, ConvergenceThresholds};
    use geopid::scenarios::scenario;
    use geopid::sim::simulate;

    fn short_run() -> Trajectory {
        let mut config = scenario("so3-first-order").unwrap().remove(0).config;
        config.t_final = 1.0;
        config.record_stride = 20;
        simulate(&config).unwrap()
    }

    #[test]
    fn csv_has_fixed_columns_and_full_precision() {
        let traj = short_run();
        let text = csv_text(&traj);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,phi,V,grad_norm,xi_norm,integral_1,integral_2,integral_3,residual_norm"
        );
        let first = lines.next().unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields.len(), 9);
        assert_eq!(fields[0], "0.0000000000000000e0");
        assert_eq!(fields[4], "", "xi_norm must be empty on first-order runs");
        // phi(0) = 2 exactly at the half-turn
        assert_eq!(fields[1], "2.0000000000000000e0");
        // 6 sampled steps: records at 0, 20, 40, 60, 80, 100
        assert_eq!(text.lines().count(), 1 + 6);
    }

    #[test]
    fn summary_reports_convergence_fields() {
        let traj = short_run();
        let report = convergence_report(&traj, ConvergenceThresholds::default());
        let value = summary_value(Some("demo"), &traj, &report);
        assert_eq!(value["name"], "demo");
        assert_eq!(value["controller"], "pi");
        assert_eq!(value["converged"], false);
        assert_eq!(value["lyapunov"]["alpha"], 0.04);
        assert_eq!(value["lyapunov"]["gamma"], Value::Null);
        assert_eq!(value["final_xi_norm"], Value::Null);
        assert!(value["diagnostics"].as_array().unwrap().len() == 1);
    }
}
