//! Controller laws: P/PD and their integral-augmented forms with the two ways
//! of transporting the integral state, plus reference feedforward.
//!
//! Every law commands in the *left* (body) channel and is a pure function of
//! the configuration, the velocity (second order only), and the integral
//! state — controllers never see the disturbance they are rejecting.
//!
//! The integral transport comes in two flavors:
//!
//! * plain (`pi`/`pid`): the integral accumulates the P (resp. PD) command,
//! * crossed (`crossed-pi`/`crossed-pid`): the integral is the left-frame
//!   image of a right-frame accumulator, which adds a bracket term to its
//!   evolution and swaps the gradient for its `LeftStar` transport:
//!
//! ```text
//! d/dt xi_i = -kp grad_lstar(phi) - [xi_bar, xi_i],   xi_bar = -kp grad_lstar(phi)
//! d/dt F_i  = -kp grad_lstar(phi) - kd xi - [xi, F_i]
//! ```

use crate::error_function::{ErrorFunction, GradientForm};
use crate::lie::{bracket, AlgebraVector, Frame, GroupElement, GroupId};
use thiserror::Error;

/// Order of the plant a controller closes the loop around: velocity-commanded
/// (first) or torque-commanded (second).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantOrder {
    First,
    Second,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GainError {
    #[error("proportional gain k_p must be positive and finite, got {0}")]
    InvalidProportional(f64),
    #[error("derivative gain k_d must be nonnegative and finite, got {0}")]
    InvalidDerivative(f64),
    #[error("integral gain k_i must be nonnegative and finite, got {0}")]
    InvalidIntegral(f64),
    #[error("k_i ({k_i}) must be strictly less than k_d ({k_d}) for integral action on a torque-commanded plant; construct with force=true to experiment outside the guaranteed regime")]
    IntegralNotBelowDamping { k_i: f64, k_d: f64 },
}

/// Validated gain triple. `k_d`/`k_i` default to zero for laws that do not
/// use them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSet {
    pub k_p: f64,
    pub k_d: f64,
    pub k_i: f64,
}

impl GainSet {
    pub fn new(k_p: f64, k_d: f64, k_i: f64) -> Result<Self, GainError> {
        if !(k_p > 0.0 && k_p.is_finite()) {
            return Err(GainError::InvalidProportional(k_p));
        }
        if !(k_d >= 0.0 && k_d.is_finite()) {
            return Err(GainError::InvalidDerivative(k_d));
        }
        if !(k_i >= 0.0 && k_i.is_finite()) {
            return Err(GainError::InvalidIntegral(k_i));
        }
        Ok(GainSet { k_p, k_d, k_i })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    P,
    Pd,
    Pi,
    Pid,
    CrossedPi,
    CrossedPid,
}

impl ControllerKind {
    pub fn order(self) -> PlantOrder {
        match self {
            ControllerKind::P | ControllerKind::Pi | ControllerKind::CrossedPi => PlantOrder::First,
            ControllerKind::Pd | ControllerKind::Pid | ControllerKind::CrossedPid => PlantOrder::Second,
        }
    }

    pub fn uses_integral(self) -> bool {
        !matches!(self, ControllerKind::P | ControllerKind::Pd)
    }

    pub fn is_crossed(self) -> bool {
        matches!(self, ControllerKind::CrossedPi | ControllerKind::CrossedPid)
    }

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::P => "p",
            ControllerKind::Pd => "pd",
            ControllerKind::Pi => "pi",
            ControllerKind::Pid => "pid",
            ControllerKind::CrossedPi => "crossed-pi",
            ControllerKind::CrossedPid => "crossed-pid",
        }
    }
}

/// Integral state of a running controller. `frame` records the channel the
/// command lives in; every law here commands in the left channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub integral: AlgebraVector,
    pub frame: Frame,
}

impl ControllerState {
    pub fn zero(group: GroupId) -> Self {
        ControllerState { integral: AlgebraVector::zero(group), frame: Frame::Left }
    }

    pub fn with_integral(integral: AlgebraVector) -> Self {
        ControllerState { integral, frame: Frame::Left }
    }
}

/// Output of one controller evaluation: the commanded velocity/torque and the
/// time derivative of the integral state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandRates {
    pub command: AlgebraVector,
    pub integral_rate: AlgebraVector,
}

/// `-k_p grad_left(phi)`.
pub fn p_command(gains: &GainSet, f: &ErrorFunction, g: &GroupElement) -> AlgebraVector {
    f.gradient(g, GradientForm::Left) * -gains.k_p
}

/// `-k_p grad_left(phi) - k_d xi`.
pub fn pd_command(
    gains: &GainSet,
    f: &ErrorFunction,
    g: &GroupElement,
    xi: &AlgebraVector,
) -> AlgebraVector {
    p_command(gains, f, g) - *xi * gains.k_d
}

/// First-order law with plain integral transport: the integral accumulates
/// exactly the P command.
pub fn pi_step(
    gains: &GainSet,
    f: &ErrorFunction,
    g: &GroupElement,
    state: &ControllerState,
) -> CommandRates {
    let p = p_command(gains, f, g);
    CommandRates { command: p + state.integral * gains.k_i, integral_rate: p }
}

/// Second-order law with plain integral transport: the integral accumulates
/// exactly the PD command.
pub fn pid_step(
    gains: &GainSet,
    f: &ErrorFunction,
    g: &GroupElement,
    xi: &AlgebraVector,
    state: &ControllerState,
) -> CommandRates {
    let pd = pd_command(gains, f, g, xi);
    CommandRates { command: pd + state.integral * gains.k_i, integral_rate: pd }
}

/// First-order crossed law: `LeftStar` gradient and a bracket correction that
/// keeps the integral the left-frame image of a right-frame accumulator.
pub fn crossed_pi_step(
    gains: &GainSet,
    f: &ErrorFunction,
    g: &GroupElement,
    state: &ControllerState,
) -> CommandRates {
    let xi_bar = f.gradient(g, GradientForm::LeftStar) * -gains.k_p;
    CommandRates {
        command: xi_bar + state.integral * gains.k_i,
        integral_rate: xi_bar - bracket(&xi_bar, &state.integral),
    }
}

/// Second-order crossed law; the bracket correction uses the true velocity.
pub fn crossed_pid_step(
    gains: &GainSet,
    f: &ErrorFunction,
    g: &GroupElement,
    xi: &AlgebraVector,
    state: &ControllerState,
) -> CommandRates {
    let pd = f.gradient(g, GradientForm::LeftStar) * -gains.k_p - *xi * gains.k_d;
    CommandRates {
        command: pd + state.integral * gains.k_i,
        integral_rate: pd - bracket(xi, &state.integral),
    }
}

/// Reference to regulate against, optionally moving along a constant
/// left-invariant velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSpec {
    pub target: GroupElement,
    pub target_velocity: Option<AlgebraVector>,
}

impl ReferenceSpec {
    pub fn identity(group: GroupId) -> Self {
        ReferenceSpec { target: GroupElement::identity(group), target_velocity: None }
    }

    pub fn fixed(target: GroupElement) -> Self {
        ReferenceSpec { target, target_velocity: None }
    }

    pub fn moving(target: GroupElement, velocity: AlgebraVector) -> Self {
        assert_eq!(target.group(), velocity.group());
        ReferenceSpec { target, target_velocity: Some(velocity) }
    }
}

/// Feedforward that cancels the reference motion in the plant's left channel:
/// `Ad_{g^-1 r} chi`. Zero for a fixed reference. Adding it to a first-order
/// command makes the tracking error evolve exactly like the fixed-reference
/// closed loop.
pub fn feedforward(reference: &ReferenceSpec, g: &GroupElement) -> AlgebraVector {
    match &reference.target_velocity {
        None => AlgebraVector::zero(g.group()),
        Some(chi) => {
            let rel = g.inverse().mul_unchecked(&reference.target);
            rel.adjoint().apply(chi)
        }
    }
}

/// A controller kind bound to gains, an error function, and a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controller {
    pub kind: ControllerKind,
    pub gains: GainSet,
    pub error_fn: ErrorFunction,
    pub reference: ReferenceSpec,
}

impl Controller {
    /// Validates the gain triple against the kind. Torque-commanded integral
    /// laws require `k_i < k_d` (the sufficient stability condition); use
    /// [`Controller::new_forced`] to bypass it deliberately.
    pub fn new(
        kind: ControllerKind,
        gains: GainSet,
        error_fn: ErrorFunction,
    ) -> Result<Self, GainError> {
        if matches!(kind, ControllerKind::Pid | ControllerKind::CrossedPid)
            && gains.k_i >= gains.k_d
        {
            return Err(GainError::IntegralNotBelowDamping { k_i: gains.k_i, k_d: gains.k_d });
        }
        Ok(Controller {
            kind,
            gains,
            error_fn,
            reference: ReferenceSpec::identity(error_fn.group()),
        })
    }

    /// Skips the `k_i < k_d` check, returning the conditions that were
    /// violated as diagnostics instead.
    pub fn new_forced(
        kind: ControllerKind,
        gains: GainSet,
        error_fn: ErrorFunction,
    ) -> (Self, Vec<String>) {
        let mut diagnostics = Vec::new();
        if matches!(kind, ControllerKind::Pid | ControllerKind::CrossedPid)
            && gains.k_i >= gains.k_d
        {
            diagnostics.push(format!(
                "forced gains: k_i ({}) >= k_d ({}) is outside the guaranteed stability regime",
                gains.k_i, gains.k_d
            ));
        }
        (
            Controller {
                kind,
                gains,
                error_fn,
                reference: ReferenceSpec::identity(error_fn.group()),
            },
            diagnostics,
        )
    }

    pub fn group(&self) -> GroupId {
        self.error_fn.group()
    }

    pub fn order(&self) -> PlantOrder {
        self.kind.order()
    }

    /// Conditions under which this controller runs without a convergence
    /// guarantee (informational, not errors).
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.kind == ControllerKind::CrossedPi && self.group() == GroupId::Se3 {
            out.push(
                "crossed-pi on se3: the adjoint is not unitary, so the first-order crossed law \
                 carries no convergence guarantee"
                    .to_string(),
            );
        }
        out
    }

    /// Evaluate the law. `xi` must be `Some` exactly for second-order kinds.
    /// The configuration is first expressed relative to the reference; for
    /// moving first-order references the feedforward is added to the command.
    pub fn step(
        &self,
        g: &GroupElement,
        xi: Option<&AlgebraVector>,
        state: &ControllerState,
    ) -> CommandRates {
        let rel = self.reference.target.inverse().mul_unchecked(g);
        let f = &self.error_fn;
        let gains = &self.gains;
        let mut rates = match (self.kind, xi) {
            (ControllerKind::P, None) => CommandRates {
                command: p_command(gains, f, &rel),
                integral_rate: AlgebraVector::zero(self.group()),
            },
            (ControllerKind::Pi, None) => pi_step(gains, f, &rel, state),
            (ControllerKind::CrossedPi, None) => crossed_pi_step(gains, f, &rel, state),
            (ControllerKind::Pd, Some(xi)) => CommandRates {
                command: pd_command(gains, f, &rel, xi),
                integral_rate: AlgebraVector::zero(self.group()),
            },
            (ControllerKind::Pid, Some(xi)) => pid_step(gains, f, &rel, xi, state),
            (ControllerKind::CrossedPid, Some(xi)) => crossed_pid_step(gains, f, &rel, xi, state),
            (kind, xi) => panic!(
                "controller {kind:?} called with velocity {}",
                if xi.is_some() { "present" } else { "absent" }
            ),
        };
        if self.order() == PlantOrder::First && self.reference.target_velocity.is_some() {
            rates.command = rates.command + feedforward(&self.reference, g);
        }
        rates
    }
}
