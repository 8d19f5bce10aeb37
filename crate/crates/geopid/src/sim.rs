//! Closed-loop time integration on the group.
//!
//! The plant is either velocity-commanded (`d/dt g = g (u + b)^`, first
//! order) or torque-commanded (`d/dt xi = u + b` with `d/dt g = g xi^`,
//! second order), with a constant additive bias `b` expressed in a frame of
//! its own. The simulator owns all mutable state; controllers are pure rate
//! functions and never see the bias.
//!
//! Each step also evaluates the Lyapunov candidate from [`crate::analysis`].
//! That evaluation reads the ground-truth bias (transported into the
//! controller's left channel), which is legitimate for a monitoring device
//! but would not be available to a real controller — nothing computed here
//! feeds back into the command.

use crate::analysis::{
    lyapunov_first_order, lyapunov_second_order, LyapunovParams, RESIDUAL_TRACK_LEVEL,
};
use crate::control::{Controller, ControllerState, PlantOrder};
use crate::error_function::GradientForm;
use crate::lie::{retract, AlgebraVector, Frame, GroupElement};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("simulation state became non-finite at t = {time} s")]
    NonFiniteState { time: f64 },
    #[error("invalid simulation configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// One retraction per step, forward Euler on vector states. Global order 1.
    LieEuler,
    /// Classical four-stage Runge-Kutta on the algebra/vector rates with a
    /// single retraction of the combined increment. The missing dexp-inverse
    /// correction costs two orders on the group state: global order 2 (exact
    /// for commuting increments).
    Rkmk4,
}

/// Which plant input the bias corrupts. Velocity biases belong to first-order
/// plants, torque biases to second-order ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasChannel {
    Velocity,
    Torque,
}

/// Constant additive disturbance, frozen in its own frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasSpec {
    pub frame: Frame,
    pub channel: BiasChannel,
    pub vector: AlgebraVector,
}

impl BiasSpec {
    pub fn velocity(frame: Frame, vector: AlgebraVector) -> Self {
        BiasSpec { frame, channel: BiasChannel::Velocity, vector }
    }

    pub fn torque(frame: Frame, vector: AlgebraVector) -> Self {
        BiasSpec { frame, channel: BiasChannel::Torque, vector }
    }

    /// The bias as seen from the left (body) channel at configuration `g`.
    /// A left-frame bias is already there; a right-frame bias is transported
    /// by `Ad_{g^-1}` at the current state.
    pub fn in_left_frame(&self, g: &GroupElement) -> AlgebraVector {
        match self.frame {
            Frame::Left => self.vector,
            Frame::Right => g.inverse().adjoint().apply(&self.vector),
        }
    }
}

/// Total first-order plant input in the left channel: the command plus the
/// bias expressed in that same channel.
pub fn plant_velocity(bias: &BiasSpec, command: &AlgebraVector, g: &GroupElement) -> AlgebraVector {
    *command + bias.in_left_frame(g)
}

/// Full description of one run.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub controller: Controller,
    pub bias: BiasSpec,
    pub g0: GroupElement,
    /// Initial body velocity; ignored (and kept at zero) for first-order plants.
    pub xi0: AlgebraVector,
    pub integral0: AlgebraVector,
    pub dt: f64,
    pub t_final: f64,
    pub integrator: Integrator,
    /// Record every this-many steps (the final step is always recorded).
    pub record_stride: usize,
    pub lyapunov: LyapunovParams,
}

impl SimConfig {
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive and finite, got {}", self.dt));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return bad(format!(
                "t_final ({}) must be finite and at least one step (dt = {})",
                self.t_final, self.dt
            ));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1".to_string());
        }
        let group = self.controller.group();
        for (name, g) in [
            ("bias vector", self.bias.vector.group()),
            ("initial configuration", self.g0.group()),
            ("initial velocity", self.xi0.group()),
            ("initial integral", self.integral0.group()),
        ] {
            if g != group {
                return bad(format!(
                    "{name} lives on {g:?} but the controller acts on {group:?}"
                ));
            }
        }
        let order = self.controller.order();
        match (order, self.bias.channel) {
            (PlantOrder::First, BiasChannel::Velocity) => {}
            (PlantOrder::Second, BiasChannel::Torque) => {}
            (PlantOrder::First, BiasChannel::Torque) => {
                return bad("a velocity-commanded plant takes a velocity bias, not torque".into())
            }
            (PlantOrder::Second, BiasChannel::Velocity) => {
                return bad("a torque-commanded plant takes a torque bias, not velocity".into())
            }
        }
        if order == PlantOrder::Second && self.lyapunov.gamma.is_none() {
            return bad("second-order monitoring needs the gamma weight".into());
        }
        if self.n_steps() == 0 {
            return bad(format!("t_final = {} rounds to zero steps of dt = {}", self.t_final, self.dt));
        }
        Ok(())
    }

    /// Informational flags about the run setup (printed, never fatal).
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = self.controller.diagnostics();
        let f = &self.controller.error_fn;
        let grad0 = f.gradient(&self.g0, GradientForm::Left).norm();
        if grad0 < 1e-9 && f.phi(&self.g0) > 1e-6 {
            out.push(
                "initial state is a critical point of the error function: the gradient vanishes \
                 there, so only bias or integral state moves the system at first"
                    .to_string(),
            );
        }
        out
    }
}

/// Joint state advanced by the integrator. `xi` stays at zero for
/// first-order plants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub g: GroupElement,
    pub xi: AlgebraVector,
    pub integral: AlgebraVector,
}

impl SimState {
    pub fn is_finite(&self) -> bool {
        self.g.is_finite() && self.xi.is_finite() && self.integral.is_finite()
    }
}

/// Instantaneous rates of the joint state: a left-channel group velocity and
/// plain vector derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRates {
    pub g_rate: AlgebraVector,
    pub xi_rate: AlgebraVector,
    pub integral_rate: AlgebraVector,
}

fn advance(state: &SimState, rates: &StateRates, dt: f64) -> SimState {
    SimState {
        g: retract(&state.g, &rates.g_rate, Frame::Left, dt),
        xi: state.xi + rates.xi_rate * dt,
        integral: state.integral + rates.integral_rate * dt,
    }
}

/// One step of the chosen method. Both methods keep `g` exactly on the group
/// (every update is a retraction).
pub fn integrate_step<F>(state: &SimState, rates: F, dt: f64, method: Integrator) -> SimState
where
    F: Fn(&SimState) -> StateRates,
{
    match method {
        Integrator::LieEuler => advance(state, &rates(state), dt),
        Integrator::Rkmk4 => {
            let k1 = rates(state);
            let k2 = rates(&advance(state, &k1, dt / 2.0));
            let k3 = rates(&advance(state, &k2, dt / 2.0));
            let k4 = rates(&advance(state, &k3, dt));
            let sixth = 1.0 / 6.0;
            let comb = StateRates {
                g_rate: (k1.g_rate + (k2.g_rate + k3.g_rate) * 2.0 + k4.g_rate) * sixth,
                xi_rate: (k1.xi_rate + (k2.xi_rate + k3.xi_rate) * 2.0 + k4.xi_rate) * sixth,
                integral_rate: (k1.integral_rate
                    + (k2.integral_rate + k3.integral_rate) * 2.0
                    + k4.integral_rate)
                    * sixth,
            };
            advance(state, &comb, dt)
        }
    }
}

/// One sampled instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: f64,
    pub g: GroupElement,
    /// Present on second-order runs only.
    pub xi: Option<AlgebraVector>,
    pub integral: AlgebraVector,
    pub phi: f64,
    pub v: f64,
    pub grad_norm: f64,
    /// `||k_i integral + bias-in-left-channel||`.
    pub residual_norm: f64,
}

/// Result of a finished run: samples plus whole-run bookkeeping.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SimConfig,
    pub records: Vec<Record>,
    pub diagnostics: Vec<String>,
    /// Largest single-step change of V (negative when V only ever fell) and
    /// the time at the end of that step.
    pub max_step_v_rise: f64,
    pub max_step_v_rise_time: f64,
    /// First time after which the residual stayed below
    /// [`RESIDUAL_TRACK_LEVEL`] for the rest of the run.
    pub time_to_residual_below: Option<f64>,
    /// The state came near a non-minimum critical point after having been
    /// clearly away from the critical set (a start on the set itself is
    /// reported through `diagnostics` instead).
    pub neared_critical_set: bool,
}

/// Run the closed loop. Works for both plant orders; the order comes from the
/// controller kind. Aborts with the offending time if any state or monitored
/// quantity stops being finite.
pub fn simulate(config: &SimConfig) -> Result<Trajectory, SimError> {
    config.validate()?;
    let controller = &config.controller;
    let order = controller.order();
    let group = controller.group();
    let f = &controller.error_fn;
    let k_i = controller.gains.k_i;
    let second = order == PlantOrder::Second;
    let dt = config.dt;
    let n_steps = config.n_steps();

    let rates_of = |s: &SimState| -> StateRates {
        let cstate = ControllerState::with_integral(s.integral);
        let out = controller.step(&s.g, second.then_some(&s.xi), &cstate);
        let b = config.bias.in_left_frame(&s.g);
        match order {
            PlantOrder::First => StateRates {
                g_rate: out.command + b,
                xi_rate: AlgebraVector::zero(group),
                integral_rate: out.integral_rate,
            },
            PlantOrder::Second => StateRates {
                g_rate: s.xi,
                xi_rate: out.command + b,
                integral_rate: out.integral_rate,
            },
        }
    };

    let mut state = SimState {
        g: config.g0,
        xi: if second { config.xi0 } else { AlgebraVector::zero(group) },
        integral: config.integral0,
    };
    let mut records = Vec::with_capacity(n_steps / config.record_stride + 2);
    let mut v_prev: Option<f64> = None;
    let mut max_rise = f64::NEG_INFINITY;
    let mut max_rise_time = 0.0;
    let mut last_above: Option<f64> = None;
    let mut neared = false;
    let mut left_critical_set = false;

    for step in 0..=n_steps {
        let t = step as f64 * dt;
        let bias_left = config.bias.in_left_frame(&state.g);
        let phi = f.phi(&state.g);
        let grad_norm = f.gradient(&state.g, GradientForm::Left).norm();
        let residual_norm = (state.integral * k_i + bias_left).norm();
        let v = match order {
            PlantOrder::First => lyapunov_first_order(
                &config.lyapunov,
                f,
                &state.g,
                &state.integral,
                &bias_left,
                k_i,
            ),
            PlantOrder::Second => lyapunov_second_order(
                &config.lyapunov,
                f,
                &state.g,
                &state.xi,
                &state.integral,
                &bias_left,
                k_i,
            ),
        };
        if !(phi.is_finite() && v.is_finite() && residual_norm.is_finite()) {
            return Err(SimError::NonFiniteState { time: t });
        }
        if let Some(prev) = v_prev {
            let rise = v - prev;
            if rise > max_rise {
                max_rise = rise;
                max_rise_time = t;
            }
        }
        v_prev = Some(v);
        if residual_norm >= RESIDUAL_TRACK_LEVEL {
            last_above = Some(t);
        }
        if grad_norm >= 1e-3 {
            left_critical_set = true;
        } else if left_critical_set && (phi - f.critical_value()).abs() <= 1e-3 && grad_norm < 1e-6
        {
            neared = true;
        }
        if step % config.record_stride == 0 || step == n_steps {
            records.push(Record {
                t,
                g: state.g,
                xi: second.then_some(state.xi),
                integral: state.integral,
                phi,
                v,
                grad_norm,
                residual_norm,
            });
        }
        if step == n_steps {
            break;
        }
        state = integrate_step(&state, rates_of, dt, config.integrator);
        if !state.is_finite() {
            return Err(SimError::NonFiniteState { time: (step + 1) as f64 * dt });
        }
    }

    let t_end = n_steps as f64 * dt;
    let time_to_residual_below = match last_above {
        None => Some(0.0),
        Some(t) if t < t_end => Some(t + dt),
        Some(_) => None,
    };
    Ok(Trajectory {
        config: *config,
        records,
        diagnostics: config.diagnostics(),
        max_step_v_rise: max_rise,
        max_step_v_rise_time: max_rise_time,
        time_to_residual_below,
        neared_critical_set: neared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ControllerKind, GainSet};
    use crate::error_function::ErrorFunction;
    use crate::lie::{exp_map, GroupId};
    use nalgebra::{Matrix3, Vector3};
    use std::f64::consts::PI;

    fn so3_controller(kind: ControllerKind, k_p: f64, k_d: f64, k_i: f64) -> Controller {
        Controller::new(kind, GainSet::new(k_p, k_d, k_i).unwrap(), ErrorFunction::so3()).unwrap()
    }

    fn half_turn() -> GroupElement {
        GroupElement::so3_from_matrix(
            Matrix3::new(-1.0, 2.0, 2.0, 2.0, -1.0, 2.0, 2.0, 2.0, -1.0) / 3.0,
        )
        .unwrap()
    }

    fn bias3() -> AlgebraVector {
        AlgebraVector::so3(0.01, 0.02, 0.03)
    }

    fn first_order_showcase(integrator: Integrator, dt: f64, t_final: f64) -> SimConfig {
        SimConfig {
            controller: so3_controller(ControllerKind::Pi, 0.04, 0.0, 0.01),
            bias: BiasSpec::velocity(Frame::Left, bias3()),
            g0: half_turn(),
            xi0: AlgebraVector::zero(GroupId::So3),
            integral0: AlgebraVector::zero(GroupId::So3),
            dt,
            t_final,
            integrator,
            record_stride: 100,
            lyapunov: LyapunovParams::new(0.04, 100.0, None).unwrap(),
        }
    }

    #[test]
    fn bias_transport_forms() {
        let g = exp_map(&AlgebraVector::so3(0.3, -0.2, 0.9));
        let cmd = AlgebraVector::so3(0.5, 0.0, -0.5);
        let left = BiasSpec::velocity(Frame::Left, bias3());
        assert_eq!(plant_velocity(&left, &AlgebraVector::zero(GroupId::So3), &g), bias3());
        assert!((plant_velocity(&left, &(-bias3()), &g)).norm() < 1e-20);
        let right = BiasSpec::velocity(Frame::Right, bias3());
        let expected = cmd + g.inverse().adjoint().apply(&bias3());
        assert!((plant_velocity(&right, &cmd, &g) - expected).norm() < 1e-15);
    }

    #[test]
    fn first_order_equilibrium_is_stationary() {
        let mut config = first_order_showcase(Integrator::LieEuler, 0.01, 10.0);
        config.g0 = GroupElement::identity(GroupId::So3);
        config.integral0 = AlgebraVector::so3(-1.0, -2.0, -3.0);
        config.record_stride = 10;
        let traj = simulate(&config).unwrap();
        for rec in &traj.records {
            assert!(rec.phi < 1e-24, "phi = {} at t = {}", rec.phi, rec.t);
            assert!((rec.integral - config.integral0).norm() < 1e-12);
            assert!((rec.g.rotation() - Matrix3::identity()).norm() < 1e-12);
            assert!(rec.v < 1e-24);
        }
    }

    #[test]
    fn second_order_equilibrium_is_stationary() {
        let config = SimConfig {
            controller: so3_controller(ControllerKind::Pid, 0.04, 0.2, 0.01),
            bias: BiasSpec::torque(Frame::Left, bias3()),
            g0: GroupElement::identity(GroupId::So3),
            xi0: AlgebraVector::zero(GroupId::So3),
            integral0: AlgebraVector::so3(-1.0, -2.0, -3.0),
            dt: 0.01,
            t_final: 10.0,
            integrator: Integrator::LieEuler,
            record_stride: 10,
            lyapunov: LyapunovParams::new(0.04 * 0.0039, 0.0039, Some(1.0)).unwrap(),
        };
        let traj = simulate(&config).unwrap();
        for rec in &traj.records {
            assert!(rec.phi < 1e-24);
            assert!(rec.xi.unwrap().norm() < 1e-15);
            assert!((rec.integral - config.integral0).norm() < 1e-12);
        }
    }

    #[test]
    fn crossed_equilibrium_is_stationary() {
        let config = SimConfig {
            controller: so3_controller(ControllerKind::CrossedPi, 0.04, 0.0, 0.01),
            bias: BiasSpec::velocity(Frame::Right, bias3()),
            g0: GroupElement::identity(GroupId::So3),
            xi0: AlgebraVector::zero(GroupId::So3),
            integral0: AlgebraVector::so3(-1.0, -2.0, -3.0),
            dt: 0.01,
            t_final: 10.0,
            integrator: Integrator::LieEuler,
            record_stride: 10,
            lyapunov: LyapunovParams::new(0.0004, 1.0, None).unwrap(),
        };
        let traj = simulate(&config).unwrap();
        for rec in &traj.records {
            assert!(rec.phi < 1e-24);
            assert!((rec.integral - config.integral0).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_bias_p_matches_scalar_recursion() {
        // About a fixed axis the loop collapses to theta' = -k_p sin(theta);
        // the group Euler iteration and the scalar Euler iteration are the
        // same map, so phi = 1 - cos(theta) must match to roundoff.
        let config = SimConfig {
            controller: so3_controller(ControllerKind::P, 0.04, 0.0, 0.0),
            bias: BiasSpec::velocity(Frame::Left, AlgebraVector::zero(GroupId::So3)),
            g0: exp_map(&AlgebraVector::so3(0.0, 0.0, PI / 2.0)),
            xi0: AlgebraVector::zero(GroupId::So3),
            integral0: AlgebraVector::zero(GroupId::So3),
            dt: 0.01,
            t_final: 400.0,
            integrator: Integrator::LieEuler,
            record_stride: 100,
            lyapunov: LyapunovParams::new(0.04, 1.0, None).unwrap(),
        };
        let traj = simulate(&config).unwrap();
        let mut theta = PI / 2.0;
        let mut expected = Vec::new();
        for step in 0..=config.n_steps() {
            if step % config.record_stride == 0 {
                expected.push(1.0 - theta.cos());
            }
            theta -= config.dt * 0.04 * theta.sin();
        }
        assert_eq!(traj.records.len(), expected.len());
        for (rec, phi_scalar) in traj.records.iter().zip(&expected) {
            assert!(
                (rec.phi - phi_scalar).abs() < 1e-9,
                "t = {}: {} vs {}",
                rec.t,
                rec.phi,
                phi_scalar
            );
        }
        for pair in traj.records.windows(2) {
            assert!(pair[1].phi <= pair[0].phi + 1e-15, "phi rose at t = {}", pair[1].t);
        }
        assert!(traj.records.last().unwrap().phi < 1e-6);
    }

    #[test]
    fn constant_velocity_is_exact_for_both_methods() {
        let xi = AlgebraVector::so3(0.3, -0.1, 0.2);
        let rates = |_: &SimState| StateRates {
            g_rate: xi,
            xi_rate: AlgebraVector::zero(GroupId::So3),
            integral_rate: AlgebraVector::zero(GroupId::So3),
        };
        for method in [Integrator::LieEuler, Integrator::Rkmk4] {
            let mut state = SimState {
                g: GroupElement::identity(GroupId::So3),
                xi: AlgebraVector::zero(GroupId::So3),
                integral: AlgebraVector::zero(GroupId::So3),
            };
            let dt = 0.125;
            let n = 64;
            for _ in 0..n {
                state = integrate_step(&state, rates, dt, method);
            }
            let exact = exp_map(&(xi * (dt * n as f64)));
            assert!(
                (state.g.rotation() - exact.rotation()).norm() < 1e-12,
                "{method:?} drifted off the one-parameter subgroup"
            );
        }
    }

    #[test]
    fn integrator_orders_match_their_construction() {
        // Richardson study on the first-order showcase at T = 20 against a
        // fine-step reference: the Euler slope sits at 1, and the truncated
        // Runge-Kutta variant sits at 2 (not 4 - the combined increment is
        // applied without dexp-inverse corrections).
        let run = |dt: f64, method: Integrator| {
            let mut config = first_order_showcase(method, dt, 20.0);
            config.record_stride = usize::MAX;
            let traj = simulate(&config).unwrap();
            traj.records.last().unwrap().g
        };
        let reference = run(5e-4, Integrator::Rkmk4);
        let err = |dt: f64, method: Integrator| {
            (run(dt, method).rotation() - reference.rotation()).norm()
        };
        let e_euler: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&dt| err(dt, Integrator::LieEuler)).collect();
        for pair in e_euler.windows(2) {
            let slope = (pair[0] / pair[1]).log2();
            assert!((0.9..=1.1).contains(&slope), "euler slope {slope}");
        }
        let slope_rk = (err(0.04, Integrator::Rkmk4) / err(0.02, Integrator::Rkmk4)).log2();
        assert!((1.8..=2.8).contains(&slope_rk), "rkmk4 slope {slope_rk}");
    }

    #[test]
    fn non_finite_state_aborts_with_time() {
        // Massive derivative gain at dt = 0.01 makes the velocity update an
        // unstable iteration; the run must stop with the offending time.
        let config = SimConfig {
            controller: so3_controller(ControllerKind::Pd, 0.04, 1000.0, 0.0),
            bias: BiasSpec::torque(Frame::Left, AlgebraVector::zero(GroupId::So3)),
            g0: exp_map(&AlgebraVector::so3(0.0, 0.0, PI / 2.0)),
            xi0: AlgebraVector::zero(GroupId::So3),
            integral0: AlgebraVector::zero(GroupId::So3),
            dt: 0.01,
            t_final: 20.0,
            integrator: Integrator::LieEuler,
            record_stride: 100,
            lyapunov: LyapunovParams::new(0.04, 1.0, Some(1.0)).unwrap(),
        };
        match simulate(&config) {
            Err(SimError::NonFiniteState { time }) => {
                assert!(time > 0.0 && time < 20.0, "time = {time}")
            }
            other => panic!("expected a non-finite abort, got {other:?}"),
        }
    }

    #[test]
    fn long_run_stays_on_the_group() {
        let mut config = first_order_showcase(Integrator::LieEuler, 0.01, 1000.0);
        config.record_stride = 1000;
        let traj = simulate(&config).unwrap();
        assert_eq!(traj.records.first().unwrap().t, 0.0);
        for rec in &traj.records {
            assert!(
                rec.g.orthonormality_defect() < 1e-10,
                "defect {} at t = {}",
                rec.g.orthonormality_defect(),
                rec.t
            );
        }
        for pair in traj.records.windows(2) {
            assert!(pair[1].t > pair[0].t);
        }
    }

    #[test]
    fn trajectory_shape_and_bookkeeping() {
        let config = SimConfig {
            controller: so3_controller(ControllerKind::Pid, 0.04, 0.2, 0.01),
            bias: BiasSpec::torque(Frame::Left, bias3()),
            g0: half_turn(),
            xi0: AlgebraVector::zero(GroupId::So3),
            integral0: AlgebraVector::zero(GroupId::So3),
            dt: 0.01,
            t_final: 50.0,
            integrator: Integrator::LieEuler,
            record_stride: 10,
            lyapunov: LyapunovParams::new(0.04 * 0.0039, 0.0039, Some(1.0)).unwrap(),
        };
        let traj = simulate(&config).unwrap();
        assert_eq!(traj.records.len(), 501);
        assert!(traj.records.iter().all(|r| r.xi.is_some()));
        assert!(traj.max_step_v_rise <= 1e-9, "V rose by {}", traj.max_step_v_rise);
        // the critical-point start is flagged
        assert!(traj.diagnostics.iter().any(|d| d.contains("critical point")));
        // residual starts at ||bias|| = 0.0374 > 1e-3 and has not yet settled
        // below it by t = 50
        assert!(traj.time_to_residual_below.is_none());
        assert!(!traj.neared_critical_set);
    }

    #[test]
    fn residual_settling_time_semantics() {
        // zero-bias P run: residual is identically zero, settled from t = 0
        let config = SimConfig {
            controller: so3_controller(ControllerKind::P, 0.04, 0.0, 0.0),
            bias: BiasSpec::velocity(Frame::Left, AlgebraVector::zero(GroupId::So3)),
            g0: exp_map(&AlgebraVector::so3(0.0, 0.0, 1.0)),
            xi0: AlgebraVector::zero(GroupId::So3),
            integral0: AlgebraVector::zero(GroupId::So3),
            dt: 0.01,
            t_final: 1.0,
            integrator: Integrator::LieEuler,
            record_stride: 10,
            lyapunov: LyapunovParams::new(0.04, 1.0, None).unwrap(),
        };
        assert_eq!(simulate(&config).unwrap().time_to_residual_below, Some(0.0));
    }

    #[test]
    fn config_validation_rejects_mismatches() {
        let good = first_order_showcase(Integrator::LieEuler, 0.01, 1.0);
        let mut bad = good;
        bad.dt = 0.0;
        assert!(matches!(bad.validate(), Err(SimError::InvalidConfig(_))));
        bad = good;
        bad.t_final = 0.001;
        assert!(matches!(bad.validate(), Err(SimError::InvalidConfig(_))));
        bad = good;
        bad.record_stride = 0;
        assert!(matches!(bad.validate(), Err(SimError::InvalidConfig(_))));
        bad = good;
        bad.bias = BiasSpec::torque(Frame::Left, bias3());
        assert!(matches!(bad.validate(), Err(SimError::InvalidConfig(_))));
        bad = good;
        bad.integral0 = AlgebraVector::se3(Vector3::zeros(), Vector3::zeros());
        assert!(matches!(bad.validate(), Err(SimError::InvalidConfig(_))));
        assert!(good.validate().is_ok());
    }
}
