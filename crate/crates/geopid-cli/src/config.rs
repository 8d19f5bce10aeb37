//! Plain-text run configuration: one `key = value` per line, `#` comments.
//!
//! Every physical field maps onto the library's `SimConfig`; unknown keys and
//! keys that do not apply to the configured group/order are rejected so a
//! typo cannot silently change an experiment.

use geopid::analysis::{default_params, AnalysisError, ConvergenceThresholds, LyapunovParams};
use geopid::control::{Controller, ControllerKind, GainSet, PlantOrder};
use geopid::error_function::ErrorFunction;
use geopid::lie::{exp_map, AlgebraVector, Frame, GroupElement, GroupId};
use geopid::sim::{BiasChannel, BiasSpec, Integrator, SimConfig};
use nalgebra::Vector3;

/// Parsed, default-filled run description. Optional fields stay `None` when
/// the config omitted them (their defaults are applied while building the
/// `SimConfig`), which keeps serialize/parse round-trips exact.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub group: GroupId,
    pub order: PlantOrder,
    pub controller: ControllerKind,
    pub k_p: f64,
    pub k_d: f64,
    pub k_i: f64,
    pub bias_frame: Frame,
    pub bias_channel: BiasChannel,
    pub bias: Vec<f64>,
    /// Starting rotation as axis-angle (x, y, z, angle); identity when absent.
    pub q0: Option<[f64; 4]>,
    /// Starting translation (se3 only); zero when absent.
    pub p0: Option<[f64; 3]>,
    /// Starting velocity (order 2 only); zero when absent.
    pub xi0: Option<Vec<f64>>,
    /// Starting integral state; zero when absent.
    pub integral0: Option<Vec<f64>>,
    pub dt: f64,
    pub t_final: f64,
    pub integrator: Integrator,
    pub record_stride: usize,
    /// Weight of the translation part of the error (se3 only; 1 when absent).
    pub translation_weight: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub output_csv: String,
    pub output_summary: String,
}

/// Everything needed to execute a run.
#[derive(Debug, Clone)]
pub struct BuiltRun {
    pub config: SimConfig,
    pub thresholds: ConvergenceThresholds,
    pub output_csv: String,
    pub output_summary: String,
}

struct RawConfig {
    entries: Vec<(String, String, usize)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, String> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {line_no}: expected 'key = value', got '{line}'"))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(format!("line {line_no}: empty key or value"));
            }
            if let Some((_, _, first)) = entries.iter().find(|(k, _, _)| *k == key) {
                return Err(format!(
                    "line {line_no}: key '{key}' already set on line {first}"
                ));
            }
            entries.push((key, value, line_no));
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        let pos = self.entries.iter().position(|(k, _, _)| k == key)?;
        let (_, value, line) = self.entries.remove(pos);
        Some((value, line))
    }

    fn finish(self) -> Result<(), String> {
        match self.entries.first() {
            None => Ok(()),
            Some((key, _, line)) => Err(format!("line {line}: unknown key '{key}'")),
        }
    }

    /// Error for a key that is present but meaningless in this configuration.
    fn reject(&mut self, key: &str, why: &str) -> Result<(), String> {
        match self.take(key) {
            None => Ok(()),
            Some((_, line)) => Err(format!("line {line}: key '{key}' does not apply: {why}")),
        }
    }
}

fn parse_f64(key: &str, value: &str, line: usize) -> Result<f64, String> {
    value
        .parse::<f64>()
        .map_err(|_| format!("line {line}: '{key}' expects a number, got '{value}'"))
}

fn parse_usize(key: &str, value: &str, line: usize) -> Result<usize, String> {
    value
        .parse::<usize>()
        .map_err(|_| format!("line {line}: '{key}' expects a whole number, got '{value}'"))
}

/// A number, with `pi`/`-pi` accepted for convenience in angles.
fn parse_angle_component(key: &str, value: &str, line: usize) -> Result<f64, String> {
    match value {
        "pi" => Ok(std::f64::consts::PI),
        "-pi" => Ok(-std::f64::consts::PI),
        other => parse_f64(key, other, line),
    }
}

fn parse_vector(key: &str, value: &str, line: usize, want: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != want {
        return Err(format!(
            "line {line}: '{key}' expects {want} comma-separated numbers, got {}",
            parts.len()
        ));
    }
    parts.iter().map(|p| parse_f64(key, p, line)).collect()
}

pub fn parse_config(text: &str) -> Result<RunSpec, String> {
    let mut raw = RawConfig::parse(text)?;

    let (group_s, group_line) =
        raw.take("group").ok_or("missing required key 'group'".to_string())?;
    let group = match group_s.as_str() {
        "so3" => GroupId::So3,
        "se3" => GroupId::Se3,
        other => return Err(format!("line {group_line}: unknown group '{other}' (so3 or se3)")),
    };

    let (order_s, order_line) =
        raw.take("order").ok_or("missing required key 'order'".to_string())?;
    let order = match order_s.as_str() {
        "1" => PlantOrder::First,
        "2" => PlantOrder::Second,
        other => return Err(format!("line {order_line}: order must be 1 or 2, got '{other}'")),
    };

    let (kind_s, kind_line) =
        raw.take("controller").ok_or("missing required key 'controller'".to_string())?;
    let controller = match kind_s.as_str() {
        "p" => ControllerKind::P,
        "pd" => ControllerKind::Pd,
        "pi" => ControllerKind::Pi,
        "pid" => ControllerKind::Pid,
        "crossed-pi" => ControllerKind::CrossedPi,
        "crossed-pid" => ControllerKind::CrossedPid,
        other => {
            return Err(format!(
                "line {kind_line}: unknown controller '{other}' (p, pd, pi, pid, crossed-pi, crossed-pid)"
            ))
        }
    };
    if controller.order() != order {
        let implied = match controller.order() {
            PlantOrder::First => 1,
            PlantOrder::Second => 2,
        };
        return Err(format!(
            "line {kind_line}: controller '{kind_s}' drives an order-{implied} plant, but order = {order_s}"
        ));
    }

    let (kp_s, kp_line) = raw.take("kp").ok_or("missing required key 'kp'".to_string())?;
    let k_p = parse_f64("kp", &kp_s, kp_line)?;

    let k_i = if controller.uses_integral() {
        match raw.take("ki") {
            Some((s, line)) => parse_f64("ki", &s, line)?,
            None => 0.0,
        }
    } else {
        raw.reject("ki", &format!("controller '{kind_s}' has no integral term"))?;
        0.0
    };

    let k_d = if order == PlantOrder::Second {
        match raw.take("kd") {
            Some((s, line)) => parse_f64("kd", &s, line)?,
            None => 0.0,
        }
    } else {
        raw.reject("kd", "first-order plants take velocity commands, so there is no damping gain")?;
        0.0
    };

    let bias_frame = match raw.take("bias_frame") {
        Some((s, line)) => match s.as_str() {
            "left" => Frame::Left,
            "right" => Frame::Right,
            other => {
                return Err(format!("line {line}: bias_frame must be left or right, got '{other}'"))
            }
        },
        None => Frame::Left,
    };
    let bias_channel = match raw.take("bias_order") {
        Some((s, line)) => match s.as_str() {
            "velocity" => BiasChannel::Velocity,
            "torque" => BiasChannel::Torque,
            other => {
                return Err(format!(
                    "line {line}: bias_order must be velocity or torque, got '{other}'"
                ))
            }
        },
        None => match order {
            PlantOrder::First => BiasChannel::Velocity,
            PlantOrder::Second => BiasChannel::Torque,
        },
    };
    let bias = match raw.take("bias") {
        Some((s, line)) => parse_vector("bias", &s, line, group.dim())?,
        None => vec![0.0; group.dim()],
    };

    let q0 = match raw.take("q0") {
        Some((s, line)) => {
            let parts: Vec<&str> = s.split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(format!(
                    "line {line}: q0 expects axis-angle 'x,y,z,angle', got {} values",
                    parts.len()
                ));
            }
            let mut vals = [0.0; 4];
            for (slot, part) in vals.iter_mut().zip(&parts) {
                *slot = parse_angle_component("q0", part, line)?;
            }
            if Vector3::new(vals[0], vals[1], vals[2]).norm() < 1e-12 && vals[3] != 0.0 {
                return Err(format!("line {line}: q0 axis must be nonzero for a nonzero angle"));
            }
            Some(vals)
        }
        None => None,
    };

    let p0 = match group {
        GroupId::Se3 => match raw.take("p0") {
            Some((s, line)) => {
                let v = parse_vector("p0", &s, line, 3)?;
                Some([v[0], v[1], v[2]])
            }
            None => None,
        },
        GroupId::So3 => {
            raw.reject("p0", "so3 has no translation part")?;
            None
        }
    };
    let translation_weight = match group {
        GroupId::Se3 => match raw.take("translation_weight") {
            Some((s, line)) => Some(parse_f64("translation_weight", &s, line)?),
            None => None,
        },
        GroupId::So3 => {
            raw.reject("translation_weight", "so3 has no translation part")?;
            None
        }
    };

    let xi0 = match order {
        PlantOrder::Second => match raw.take("xi0") {
            Some((s, line)) => Some(parse_vector("xi0", &s, line, group.dim())?),
            None => None,
        },
        PlantOrder::First => {
            raw.reject("xi0", "first-order plants have no velocity state")?;
            None
        }
    };
    let integral0 = match raw.take("integral0") {
        Some((s, line)) => Some(parse_vector("integral0", &s, line, group.dim())?),
        None => None,
    };

    let dt = match raw.take("dt") {
        Some((s, line)) => parse_f64("dt", &s, line)?,
        None => 0.01,
    };
    let t_final = match raw.take("t_final") {
        Some((s, line)) => parse_f64("t_final", &s, line)?,
        None => 1500.0,
    };
    let integrator = match raw.take("integrator") {
        Some((s, line)) => match s.as_str() {
            "lie_euler" => Integrator::LieEuler,
            "rkmk4" => Integrator::Rkmk4,
            other => {
                return Err(format!(
                    "line {line}: integrator must be lie_euler or rkmk4, got '{other}'"
                ))
            }
        },
        None => Integrator::LieEuler,
    };
    let record_stride = match raw.take("record_stride") {
        Some((s, line)) => parse_usize("record_stride", &s, line)?,
        None => 10,
    };

    let alpha = match raw.take("alpha") {
        Some((s, line)) => Some(parse_f64("alpha", &s, line)?),
        None => None,
    };
    let beta = match raw.take("beta") {
        Some((s, line)) => Some(parse_f64("beta", &s, line)?),
        None => None,
    };
    let gamma = match order {
        PlantOrder::Second => match raw.take("gamma") {
            Some((s, line)) => Some(parse_f64("gamma", &s, line)?),
            None => None,
        },
        PlantOrder::First => {
            raw.reject("gamma", "the gamma weight belongs to second-order monitoring")?;
            None
        }
    };

    let output_csv = match raw.take("output_csv") {
        Some((s, _)) => s,
        None => "run.csv".to_string(),
    };
    let output_summary = match raw.take("output_summary") {
        Some((s, _)) => s,
        None => "run-summary.json".to_string(),
    };

    raw.finish()?;

    Ok(RunSpec {
        group,
        order,
        controller,
        k_p,
        k_d,
        k_i,
        bias_frame,
        bias_channel,
        bias,
        q0,
        p0,
        xi0,
        integral0,
        dt,
        t_final,
        integrator,
        record_stride,
        translation_weight,
        alpha,
        beta,
        gamma,
        output_csv,
        output_summary,
    })
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Emit a config that parses back to exactly this spec (only applicable keys
/// are written; `f64` display round-trips bit-exactly).
pub fn serialize(spec: &RunSpec) -> String {
    let mut out = String::new();
    let mut push = |key: &str, value: String| {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(&value);
        out.push('\n');
    };
    push("group", match spec.group {
        GroupId::So3 => "so3".into(),
        GroupId::Se3 => "se3".into(),
    });
    push("order", match spec.order {
        PlantOrder::First => "1".into(),
        PlantOrder::Second => "2".into(),
    });
    push("controller", spec.controller.name().into());
    push("kp", spec.k_p.to_string());
    if spec.controller.uses_integral() {
        push("ki", spec.k_i.to_string());
    }
    if spec.order == PlantOrder::Second {
        push("kd", spec.k_d.to_string());
    }
    push("bias_frame", match spec.bias_frame {
        Frame::Left => "left".into(),
        Frame::Right => "right".into(),
    });
    push("bias_order", match spec.bias_channel {
        BiasChannel::Velocity => "velocity".into(),
        BiasChannel::Torque => "torque".into(),
    });
    push("bias", join(&spec.bias));
    if let Some(q0) = spec.q0 {
        push("q0", join(&q0));
    }
    if let Some(p0) = spec.p0 {
        push("p0", join(&p0));
    }
    if let Some(w) = spec.translation_weight {
        push("translation_weight", w.to_string());
    }
    if let Some(xi0) = &spec.xi0 {
        push("xi0", join(xi0));
    }
    if let Some(integral0) = &spec.integral0 {
        push("integral0", join(integral0));
    }
    push("dt", spec.dt.to_string());
    push("t_final", spec.t_final.to_string());
    push("integrator", match spec.integrator {
        Integrator::LieEuler => "lie_euler".into(),
        Integrator::Rkmk4 => "rkmk4".into(),
    });
    push("record_stride", spec.record_stride.to_string());
    if let Some(alpha) = spec.alpha {
        push("alpha", alpha.to_string());
    }
    if let Some(beta) = spec.beta {
        push("beta", beta.to_string());
    }
    if let Some(gamma) = spec.gamma {
        push("gamma", gamma.to_string());
    }
    push("output_csv", spec.output_csv.clone());
    push("output_summary", spec.output_summary.clone());
    out
}

impl RunSpec {
    fn rotation_from_q0(&self) -> Result<nalgebra::Matrix3<f64>, String> {
        match self.q0 {
            None => Ok(nalgebra::Matrix3::identity()),
            Some([x, y, z, angle]) => {
                let axis = Vector3::new(x, y, z);
                if angle == 0.0 {
                    return Ok(nalgebra::Matrix3::identity());
                }
                if axis.norm() < 1e-12 {
                    return Err("q0 axis must be nonzero for a nonzero angle".to_string());
                }
                let w = axis.normalize() * angle;
                Ok(*exp_map(&AlgebraVector::from_omega(w)).rotation())
            }
        }
    }

    fn lyapunov(&self, gains: &GainSet) -> Result<LyapunovParams, String> {
        match (self.alpha, self.beta) {
            (Some(alpha), Some(beta)) => {
                let gamma = match self.order {
                    PlantOrder::First => None,
                    PlantOrder::Second => Some(self.gamma.unwrap_or(1.0)),
                };
                LyapunovParams::new(alpha, beta, gamma).map_err(|e| e.to_string())
            }
            (None, None) => match default_params(gains, self.order) {
                Ok(p) => Ok(p),
                // Integral-free laws have no proof-backed weights; fall back
                // to plain error monitoring.
                Err(AnalysisError::ZeroIntegralGain) => {
                    let gamma = match self.order {
                        PlantOrder::First => None,
                        PlantOrder::Second => Some(1.0),
                    };
                    LyapunovParams::new(gains.k_p, 1.0, gamma).map_err(|e| e.to_string())
                }
                Err(e) => Err(e.to_string()),
            },
            _ => Err("alpha and beta must be given together (or both omitted)".to_string()),
        }
    }

    pub fn build(&self) -> Result<BuiltRun, String> {
        let gains = GainSet::new(self.k_p, self.k_d, self.k_i).map_err(|e| e.to_string())?;
        let error_fn = match self.group {
            GroupId::So3 => ErrorFunction::so3(),
            GroupId::Se3 => ErrorFunction::se3(self.translation_weight.unwrap_or(1.0)),
        };
        let controller =
            Controller::new(self.controller, gains, error_fn).map_err(|e| e.to_string())?;

        let r = self.rotation_from_q0()?;
        let g0 = match self.group {
            GroupId::So3 => GroupElement::so3_from_matrix(r),
            GroupId::Se3 => {
                let p = self.p0.map(Vector3::from).unwrap_or_else(Vector3::zeros);
                GroupElement::se3_from_parts(r, p)
            }
        }
        .map_err(|e| format!("starting state: {e}"))?;

        let vector = |name: &str, values: &Option<Vec<f64>>| -> Result<AlgebraVector, String> {
            match values {
                None => Ok(AlgebraVector::zero(self.group)),
                Some(v) => AlgebraVector::from_slice(self.group, v)
                    .map_err(|e| format!("{name}: {e}")),
            }
        };
        let bias_vector = AlgebraVector::from_slice(self.group, &self.bias)
            .map_err(|e| format!("bias: {e}"))?;

        let lyapunov = self.lyapunov(&gains)?;
        let config = SimConfig {
            controller,
            bias: BiasSpec { frame: self.bias_frame, channel: self.bias_channel, vector: bias_vector },
            g0,
            xi0: vector("xi0", &self.xi0)?,
            integral0: vector("integral0", &self.integral0)?,
            dt: self.dt,
            t_final: self.t_final,
            integrator: self.integrator,
            record_stride: self.record_stride,
            lyapunov,
        };
        config.validate().map_err(|e| e.to_string())?;
        let thresholds = if self.controller.is_crossed() && self.order == PlantOrder::First {
            ConvergenceThresholds::for_crossed_first_order()
        } else {
            ConvergenceThresholds::default()
        };
        Ok(BuiltRun {
            config,
            thresholds,
            output_csv: self.output_csv.clone(),
            output_summary: self.output_summary.clone(),
        })
    }
}
