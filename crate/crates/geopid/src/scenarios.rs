//! The four named simulation studies (one of them a two-run comparison),
//! each pinned to a fixed set of gains, biases, and starting states and
//! carrying its own pass/fail thresholds.

use crate::analysis::{ConvergenceThresholds, LyapunovParams};
use crate::control::{Controller, ControllerKind, GainSet};
use crate::error_function::ErrorFunction;
use crate::lie::{AlgebraVector, Frame, GroupElement};
use crate::sim::{BiasSpec, Integrator, SimConfig};
use nalgebra::{Matrix3, Vector3};

/// One fully specified run plus what counts as success for it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub config: SimConfig,
    pub thresholds: ConvergenceThresholds,
    /// Whether the run is supposed to meet its thresholds (the P-only
    /// comparison leg deliberately does not).
    pub expect_convergence: bool,
}

pub const SCENARIO_NAMES: [&str; 5] = [
    "so3-first-order",
    "so3-second-order",
    "se3-first-order",
    "se3-p-vs-pi",
    "so3-crossed-pi",
];

/// The half-turn about (1,1,1)/sqrt(3) used as the rotation start everywhere:
/// a critical point of the rotation error, so only the bias moves the system
/// at first.
pub fn showcase_rotation() -> Matrix3<f64> {
    Matrix3::new(-1.0, 2.0, 2.0, 2.0, -1.0, 2.0, 2.0, 2.0, -1.0) / 3.0
}

fn drift3() -> Vector3<f64> {
    Vector3::new(0.01, 0.02, 0.03)
}

fn defaults(controller: Controller, bias: BiasSpec, g0: GroupElement, lyapunov: LyapunovParams) -> SimConfig {
    let group = controller.group();
    SimConfig {
        controller,
        bias,
        g0,
        xi0: AlgebraVector::zero(group),
        integral0: AlgebraVector::zero(group),
        dt: 0.01,
        t_final: 1500.0,
        integrator: Integrator::LieEuler,
        record_stride: 10,
        lyapunov,
    }
}

fn so3_start() -> GroupElement {
    GroupElement::so3_from_matrix(showcase_rotation()).expect("half-turn is orthonormal")
}

fn se3_start() -> GroupElement {
    GroupElement::se3_from_parts(showcase_rotation(), Vector3::new(1.0, 1.0, 1.0) / 3.0)
        .expect("half-turn is orthonormal")
}

fn se3_controller(kind: ControllerKind, gains: GainSet) -> Controller {
    Controller::new(kind, gains, ErrorFunction::se3(1.0)).expect("scenario gains are valid")
}

fn so3_first_order() -> Scenario {
    let controller = Controller::new(
        ControllerKind::Pi,
        GainSet::new(0.04, 0.0, 0.01).expect("valid"),
        ErrorFunction::so3(),
    )
    .expect("scenario gains are valid");
    Scenario {
        name: "so3-first-order".to_string(),
        config: defaults(
            controller,
            BiasSpec::velocity(Frame::Left, AlgebraVector::from_omega(drift3())),
            so3_start(),
            // fixed weights satisfying alpha = beta k_p k_i
            LyapunovParams::new(0.04, 100.0, None).expect("valid"),
        ),
        thresholds: ConvergenceThresholds::default(),
        expect_convergence: true,
    }
}

fn so3_second_order() -> Scenario {
    let controller = Controller::new(
        ControllerKind::Pid,
        GainSet::new(0.04, 0.2, 0.01).expect("valid"),
        ErrorFunction::so3(),
    )
    .expect("scenario gains are valid");
    Scenario {
        name: "so3-second-order".to_string(),
        config: defaults(
            controller,
            BiasSpec::torque(Frame::Left, AlgebraVector::from_omega(drift3())),
            so3_start(),
            // fixed weights; beta lies in the feasible interval and
            // alpha = beta k_p
            LyapunovParams::new(0.04 * 0.0039, 0.0039, Some(1.0)).expect("valid"),
        ),
        thresholds: ConvergenceThresholds::default(),
        expect_convergence: true,
    }
}

fn se3_bias() -> BiasSpec {
    BiasSpec::velocity(Frame::Left, AlgebraVector::se3(drift3(), drift3()))
}

fn se3_first_order() -> Scenario {
    let gains = GainSet::new(0.04, 0.0, 0.01).expect("valid");
    Scenario {
        name: "se3-first-order".to_string(),
        config: defaults(
            se3_controller(ControllerKind::Pi, gains),
            se3_bias(),
            se3_start(),
            LyapunovParams::new(0.04 * 0.01, 1.0, None).expect("valid"),
        ),
        thresholds: ConvergenceThresholds::default(),
        expect_convergence: true,
    }
}

/// The comparison pair: P alone is pushed off the target by the bias and
/// settles at a nonzero offset; PI rejects it.
fn se3_p_vs_pi() -> Vec<Scenario> {
    let p = Scenario {
        name: "se3-p-vs-pi-p".to_string(),
        config: defaults(
            se3_controller(ControllerKind::P, GainSet::new(0.04, 0.0, 0.0).expect("valid")),
            se3_bias(),
            se3_start(),
            // no integral gain, so no proof-backed weights exist; keeping
            // alpha = k_p, beta = 1 makes V = k_p phi + const for monitoring
            LyapunovParams::new(0.04, 1.0, None).expect("valid"),
        ),
        thresholds: ConvergenceThresholds::default(),
        expect_convergence: false,
    };
    let mut pi = se3_first_order();
    pi.name = "se3-p-vs-pi-pi".to_string();
    vec![p, pi]
}

fn so3_crossed_pi() -> Scenario {
    let controller = Controller::new(
        ControllerKind::CrossedPi,
        GainSet::new(0.04, 0.0, 0.01).expect("valid"),
        ErrorFunction::so3(),
    )
    .expect("scenario gains are valid");
    Scenario {
        name: "so3-crossed-pi".to_string(),
        config: defaults(
            controller,
            BiasSpec::velocity(Frame::Right, AlgebraVector::from_omega(drift3())),
            so3_start(),
            LyapunovParams::new(0.04 * 0.01, 1.0, None).expect("valid"),
        ),
        thresholds: ConvergenceThresholds::for_crossed_first_order(),
        expect_convergence: true,
    }
}

/// Look up a study by name. Most names yield a single run; the comparison
/// pair yields two.
pub fn scenario(name: &str) -> Option<Vec<Scenario>> {
    match name {
        "so3-first-order" => Some(vec![so3_first_order()]),
        "so3-second-order" => Some(vec![so3_second_order()]),
        "se3-first-order" => Some(vec![se3_first_order()]),
        "se3-p-vs-pi" => Some(se3_p_vs_pi()),
        "so3-crossed-pi" => Some(vec![so3_crossed_pi()]),
        _ => None,
    }
}
