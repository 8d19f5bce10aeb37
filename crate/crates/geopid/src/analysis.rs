//! Lyapunov certificates and convergence reporting.
//!
//! Two candidate functions are evaluated along trajectories, one per plant
//! order (`b` is the disturbance expressed in the controller's left channel):
//!
//! ```text
//! order 1:  V = alpha phi + (beta/2)  ||k_i xi_i + b||^2
//! order 2:  V = alpha phi + (beta/2)  ||xi||^2
//!                         + (gamma/2) ||k_i (F_i - xi) + F_b||^2
//! ```
//!
//! With proof-consistent parameters (`alpha = beta k_p k_i` for order 1,
//! `alpha = beta k_p` with `beta` in the feasible interval for order 2) the
//! continuous-time derivative is nonpositive; the first-order case satisfies
//! the exact identity `dV/dt = -alpha k_p ||grad phi||^2`, which the
//! simulator's discrete trajectories reproduce to O(dt).

use crate::control::{GainSet, PlantOrder};
use crate::error_function::ErrorFunction;
use crate::lie::{AlgebraVector, GroupElement};
use crate::sim::Trajectory;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("Lyapunov parameter {name} must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("no feasible beta exists for k_d = {k_d}, k_i = {k_i} (requires k_i < k_d)")]
    EmptyBetaInterval { k_d: f64, k_i: f64 },
    #[error("Lyapunov defaults need k_i > 0; pick parameters explicitly for integral-free laws")]
    ZeroIntegralGain,
}

/// Weights of the Lyapunov candidates. `gamma` weighs the integral-residual
/// term and is only consulted for second-order plants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Option<f64>,
}

impl LyapunovParams {
    pub fn new(alpha: f64, beta: f64, gamma: Option<f64>) -> Result<Self, AnalysisError> {
        for (name, value) in [("alpha", alpha), ("beta", beta), ("gamma", gamma.unwrap_or(1.0))] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(AnalysisError::InvalidParameter { name, value });
            }
        }
        Ok(LyapunovParams { alpha, beta, gamma })
    }
}

/// First-order candidate `alpha phi + (beta/2)||k_i xi_i + b||^2`.
/// `bias_left` is the disturbance transported into the controller's frame
/// (for right-frame disturbances that is `Ad_{g^-1} b`, which the simulator
/// maintains each step).
pub fn lyapunov_first_order(
    params: &LyapunovParams,
    f: &ErrorFunction,
    g: &GroupElement,
    integral: &AlgebraVector,
    bias_left: &AlgebraVector,
    k_i: f64,
) -> f64 {
    let w = *integral * k_i + *bias_left;
    params.alpha * f.phi(g) + 0.5 * params.beta * w.norm_squared()
}

/// Second-order candidate
/// `alpha phi + (beta/2)||xi||^2 + (gamma/2)||k_i (F_i - xi) + F_b||^2`.
pub fn lyapunov_second_order(
    params: &LyapunovParams,
    f: &ErrorFunction,
    g: &GroupElement,
    xi: &AlgebraVector,
    integral: &AlgebraVector,
    bias_left: &AlgebraVector,
    k_i: f64,
) -> f64 {
    let gamma = params.gamma.expect("gamma is required for second-order Lyapunov evaluation");
    let w = (*integral - *xi) * k_i + *bias_left;
    params.alpha * f.phi(g) + 0.5 * params.beta * xi.norm_squared() + 0.5 * gamma * w.norm_squared()
}

/// Open interval of `beta` for which the second-order candidate certifies
/// convergence:
///
/// ```text
/// ( 2 gamma k_i (k_d - k_i/2 - sqrt(D)),  2 gamma k_i (k_d - k_i/2 + sqrt(D)) )
/// D = k_d^2 - k_i k_d
/// ```
///
/// Empty (None) when `D <= 0`, i.e. unless `k_i < k_d`. Equivalently the
/// positivity set of `P(beta) = -beta^2/(4 gamma k_i) + (k_d - k_i/2) beta
/// - gamma k_i^3 / 4`.
pub fn feasible_beta_interval(k_d: f64, k_i: f64, gamma: f64) -> Option<(f64, f64)> {
    if !(k_i > 0.0 && gamma > 0.0) {
        return None;
    }
    let delta = k_d * k_d - k_i * k_d;
    if delta <= 0.0 {
        return None;
    }
    let mid = k_d - k_i / 2.0;
    let half = delta.sqrt();
    Some((2.0 * gamma * k_i * (mid - half), 2.0 * gamma * k_i * (mid + half)))
}

/// Proof-consistent defaults: order 1 picks `beta = 1, alpha = k_p k_i`;
/// order 2 picks `gamma = 1`, `beta` the log-space midpoint of the feasible
/// interval (analytically `gamma k_i^2`), and `alpha = beta k_p`.
pub fn default_params(gains: &GainSet, order: PlantOrder) -> Result<LyapunovParams, AnalysisError> {
    if gains.k_i <= 0.0 {
        return Err(AnalysisError::ZeroIntegralGain);
    }
    match order {
        PlantOrder::First => LyapunovParams::new(gains.k_p * gains.k_i, 1.0, None),
        PlantOrder::Second => {
            let (lo, hi) = feasible_beta_interval(gains.k_d, gains.k_i, 1.0)
                .ok_or(AnalysisError::EmptyBetaInterval { k_d: gains.k_d, k_i: gains.k_i })?;
            let beta = (lo * hi).sqrt();
            LyapunovParams::new(beta * gains.k_p, beta, Some(1.0))
        }
    }
}

/// Outcome of the sublevel-set reachability check: starting with zero
/// integral state, `V(0) <= alpha phi(0) + (beta/2) B` where `B` bounds the
/// squared disturbance norm; if that is below `alpha * phi_critical`, the
/// decreasing `V` can never reach a critical point other than the minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinCertificate {
    pub v0_bound: f64,
    pub threshold: f64,
    pub margin: f64,
    pub certified: bool,
}

/// Evaluate the certificate margin for a run starting at error value `phi0`
/// with `||bias||^2 <= bias_norm_sq_bound` and zero initial integral.
pub fn basin_margin(
    params: &LyapunovParams,
    f: &ErrorFunction,
    phi0: f64,
    bias_norm_sq_bound: f64,
) -> BasinCertificate {
    let v0_bound = params.alpha * phi0 + 0.5 * params.beta * bias_norm_sq_bound;
    let threshold = params.alpha * f.critical_value();
    let margin = threshold - v0_bound;
    BasinCertificate { v0_bound, threshold, margin, certified: margin > 0.0 }
}

/// Residual level used for the time-to-convergence bookkeeping.
pub const RESIDUAL_TRACK_LEVEL: f64 = 1e-3;

/// Pass/fail levels for a run's final state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceThresholds {
    pub phi: f64,
    pub residual: f64,
}

impl Default for ConvergenceThresholds {
    fn default() -> Self {
        ConvergenceThresholds { phi: 1e-6, residual: 1e-6 }
    }
}

impl ConvergenceThresholds {
    /// The crossed first-order loop converges with a slower tail (its
    /// linearization couples the disturbance direction into a lightly damped
    /// pair), so its residual level is 1e-3 at the standard horizon.
    pub fn for_crossed_first_order() -> Self {
        ConvergenceThresholds { phi: 1e-6, residual: 1e-3 }
    }
}

/// Summary of a finished trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub final_time: f64,
    pub final_phi: f64,
    pub final_grad_norm: f64,
    pub final_residual: f64,
    /// Velocity norm at the end (second-order runs only).
    pub final_xi_norm: Option<f64>,
    /// Largest single-step increase of V (negative when V never rose).
    pub max_step_v_rise: f64,
    pub max_step_v_rise_time: f64,
    /// First time after which the residual stayed below
    /// [`RESIDUAL_TRACK_LEVEL`]; None if it never settled there.
    pub time_to_residual_below: Option<f64>,
    /// Whether any state after t=0 sat near a non-minimum critical point
    /// (phi within 1e-3 of the critical value with vanishing gradient).
    pub neared_critical_set: bool,
    pub converged: bool,
    pub thresholds: ConvergenceThresholds,
}

pub fn convergence_report(traj: &Trajectory, thresholds: ConvergenceThresholds) -> ConvergenceReport {
    let last = traj.records.last().expect("trajectories always contain the final record");
    ConvergenceReport {
        final_time: last.t,
        final_phi: last.phi,
        final_grad_norm: last.grad_norm,
        final_residual: last.residual_norm,
        final_xi_norm: last.xi.map(|x| x.norm()),
        max_step_v_rise: traj.max_step_v_rise,
        max_step_v_rise_time: traj.max_step_v_rise_time,
        time_to_residual_below: traj.time_to_residual_below,
        neared_critical_set: traj.neared_critical_set,
        converged: last.phi < thresholds.phi && last.residual_norm < thresholds.residual,
        thresholds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::GroupId;
    use nalgebra::Matrix3;
    use rand::{Rng, SeedableRng};

    fn study_gains() -> GainSet {
        GainSet::new(0.04, 0.2, 0.01).unwrap()
    }

    fn half_turn() -> GroupElement {
        GroupElement::so3_from_matrix(Matrix3::new(-1.0, 2.0, 2.0, 2.0, -1.0, 2.0, 2.0, 2.0, -1.0) / 3.0)
            .unwrap()
    }

    fn bias3() -> AlgebraVector {
        AlgebraVector::so3(0.01, 0.02, 0.03)
    }

    #[test]
    fn first_order_value_at_showcase_start() {
        // alpha 0.04, beta 100, phi = 2, zero integral, b = 0.01(1,2,3):
        // V = 0.08 + 50 * 1.4e-3 = 0.15
        let params = LyapunovParams::new(0.04, 100.0, None).unwrap();
        let v = lyapunov_first_order(
            &params,
            &ErrorFunction::so3(),
            &half_turn(),
            &AlgebraVector::zero(GroupId::So3),
            &bias3(),
            0.01,
        );
        assert!((v - 0.15).abs() < 1e-15, "{v}");
    }

    #[test]
    fn second_order_value_at_rest() {
        // alpha = 0.04*0.0039, beta = 0.0039, gamma = 1, at rest:
        // V = 2 alpha + 0.5 * ||F_b||^2 = 0.000312 + 0.0007 = 0.001012
        let params = LyapunovParams::new(0.04 * 0.0039, 0.0039, Some(1.0)).unwrap();
        let zero = AlgebraVector::zero(GroupId::So3);
        let v = lyapunov_second_order(
            &params,
            &ErrorFunction::so3(),
            &half_turn(),
            &zero,
            &zero,
            &bias3(),
            0.01,
        );
        assert!((v - 0.001012).abs() < 1e-15, "{v}");
    }

    #[test]
    fn first_order_vanishes_at_equilibrium() {
        let params = LyapunovParams::new(0.04, 100.0, None).unwrap();
        let integral = AlgebraVector::so3(-1.0, -2.0, -3.0);
        let v = lyapunov_first_order(
            &params,
            &ErrorFunction::so3(),
            &GroupElement::identity(GroupId::So3),
            &integral,
            &bias3(),
            0.01,
        );
        assert!(v.abs() < 1e-30, "{v}");
    }

    #[test]
    fn beta_interval_showcase_values() {
        // k_d = 0.2, k_i = 0.01, gamma = 1 -> about (1.28e-6, 7.80e-3).
        let (lo, hi) = feasible_beta_interval(0.2, 0.01, 1.0).unwrap();
        assert!((lo / 1.282262076414131e-6 - 1.0).abs() < 1e-12, "lo = {lo:e}");
        assert!((hi / 7.798717737923586e-3 - 1.0).abs() < 1e-12, "hi = {hi:e}");
        // ... to three significant digits: 1.28e-6 and 7.80e-3
        assert!((lo / 1.28e-6 - 1.0).abs() < 5e-3);
        assert!((hi / 7.80e-3 - 1.0).abs() < 5e-3);
        // the showcase beta sits inside
        assert!(lo < 0.0039 && 0.0039 < hi);
    }

    #[test]
    fn beta_interval_empty_cases() {
        assert_eq!(feasible_beta_interval(0.2, 0.2, 1.0), None); // k_i = k_d
        assert_eq!(feasible_beta_interval(0.1, 0.2, 1.0), None); // k_i > k_d
        assert_eq!(feasible_beta_interval(0.2, 0.0, 1.0), None); // no integral gain
    }

    #[test]
    fn beta_interval_matches_quadratic_positivity() {
        // Membership in the interval must agree with P(beta) > 0 where
        // P(beta) = -beta^2/(4 gamma k_i) + (k_d - k_i/2) beta - gamma k_i^3/4.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut inside = 0;
        for _ in 0..1000 {
            let k_d: f64 = rng.gen_range(1e-3..2.0);
            let k_i: f64 = rng.gen_range(1e-4..2.0);
            let gamma: f64 = rng.gen_range(1e-2..10.0);
            let beta: f64 = rng.gen_range(1e-8..1.0);
            let p = -beta * beta / (4.0 * gamma * k_i) + (k_d - k_i / 2.0) * beta
                - gamma * k_i.powi(3) / 4.0;
            let member = match feasible_beta_interval(k_d, k_i, gamma) {
                None => false,
                Some((lo, hi)) => {
                    // skip draws that land within roundoff of a boundary
                    if (beta - lo).abs() < 1e-9 * hi || (beta - hi).abs() < 1e-9 * hi {
                        continue;
                    }
                    lo < beta && beta < hi
                }
            };
            assert_eq!(member, p > 0.0, "k_d={k_d} k_i={k_i} gamma={gamma} beta={beta} P={p}");
            if member {
                inside += 1;
            }
        }
        assert!(inside > 50, "sampling never landed inside the interval ({inside})");
    }

    #[test]
    fn default_params_first_order() {
        let p = default_params(&study_gains(), PlantOrder::First).unwrap();
        assert_eq!(p.beta, 1.0);
        assert!((p.alpha - 0.0004).abs() < 1e-18);
        assert_eq!(p.gamma, None);
    }

    #[test]
    fn default_params_second_order() {
        let p = default_params(&study_gains(), PlantOrder::Second).unwrap();
        // geometric midpoint of the interval is gamma k_i^2 = 1e-4
        assert!((p.beta / 1e-4 - 1.0).abs() < 1e-10, "beta = {:e}", p.beta);
        assert_eq!(p.gamma, Some(1.0));
        assert!((p.alpha - p.beta * 0.04).abs() < 1e-18);
        let (lo, hi) = feasible_beta_interval(0.2, 0.01, 1.0).unwrap();
        assert!(lo < p.beta && p.beta < hi);
    }

    #[test]
    fn default_params_error_cases() {
        let no_integral = GainSet::new(0.04, 0.2, 0.0).unwrap();
        assert!(matches!(
            default_params(&no_integral, PlantOrder::First),
            Err(AnalysisError::ZeroIntegralGain)
        ));
        let ki_too_big = GainSet::new(0.04, 0.2, 0.3).unwrap();
        assert!(matches!(
            default_params(&ki_too_big, PlantOrder::Second),
            Err(AnalysisError::EmptyBetaInterval { .. })
        ));
    }

    #[test]
    fn basin_margin_reports_inequality() {
        // With the showcase weights the sublevel bound needs phi0 well below
        // the critical value: margin = alpha(2 - phi0) - (beta/2) B.
        let params = LyapunovParams::new(0.04, 100.0, None).unwrap();
        let f = ErrorFunction::so3();
        let b = 0.0014; // ||0.01*(1,2,3)||^2
        let at_two = basin_margin(&params, &f, 1.999, b);
        assert!(!at_two.certified);
        assert!((at_two.margin - (0.08 - 0.04 * 1.999 - 0.07)).abs() < 1e-15);
        let small_start = basin_margin(&params, &f, 0.1, b);
        assert!(small_start.certified);
        assert!((small_start.v0_bound - (0.004 + 0.07)).abs() < 1e-15);
        assert_eq!(small_start.threshold, 0.08);
    }

    #[test]
    fn params_validation() {
        assert!(LyapunovParams::new(0.0, 1.0, None).is_err());
        assert!(LyapunovParams::new(1.0, -2.0, None).is_err());
        assert!(LyapunovParams::new(1.0, 1.0, Some(f64::INFINITY)).is_err());
        assert!(LyapunovParams::new(1.0, 1.0, Some(1.0)).is_ok());
    }
}
