//! Configuration error functions and their invariant gradients.
//!
//! On SO(3) the error is `phi(Q) = (1/2) tr(I - Q)`; on SE(3) a weighted
//! translation term is added:
//!
//! ```text
//! phi(Q, p) = (1/2) tr(I - Q) + (w/2) ||p||^2
//! ```
//!
//! `phi` is smooth, vanishes exactly at the identity, and its only other
//! critical points are the half-turn rotations (with p = 0), all at the
//! critical value 2. Three gradient forms are exposed:
//!
//! * `Left`      — gradient against left-trivialized perturbations
//!                 `g exp(t delta)`,
//! * `Right`     — against right perturbations `exp(t delta) g`, i.e.
//!                 `Ad*_{g^-1} grad_left` (matrix transpose under the
//!                 Euclidean identification),
//! * `LeftStar`  — the transported form `Ad_{g^-1} Ad*_{g^-1} grad_left`
//!                 used by the crossed integral laws; on SO(3) the adjoint is
//!                 unitary so this equals the left gradient exactly.

use crate::lie::{AlgebraVector, GroupElement, GroupId};
use nalgebra::Vector3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientForm {
    Left,
    Right,
    LeftStar,
}

/// Error function bound to one group; carries the SE(3) translation weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorFunction {
    group: GroupId,
    translation_weight: f64,
}

impl ErrorFunction {
    pub fn so3() -> Self {
        ErrorFunction { group: GroupId::So3, translation_weight: 1.0 }
    }

    /// SE(3) error with translation weight `w > 0`.
    pub fn se3(translation_weight: f64) -> Self {
        assert!(
            translation_weight > 0.0 && translation_weight.is_finite(),
            "translation weight must be positive and finite"
        );
        ErrorFunction { group: GroupId::Se3, translation_weight }
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn translation_weight(&self) -> f64 {
        self.translation_weight
    }

    /// Error value; nonnegative, zero only at the identity.
    pub fn phi(&self, g: &GroupElement) -> f64 {
        assert_eq!(self.group, g.group(), "error function applied across groups");
        let rot = 0.5 * (3.0 - g.rotation().trace());
        let trans = match self.group {
            GroupId::So3 => 0.0,
            GroupId::Se3 => 0.5 * self.translation_weight * g.translation().norm_squared(),
        };
        // Clamp the ~1e-16 negative roundoff that tr(Q) can produce at the minimum.
        (rot + trans).max(0.0)
    }

    /// Smallest critical value above the minimum (attained on half-turn
    /// rotations); sublevel sets below it contain no spurious critical points.
    pub fn critical_value(&self) -> f64 {
        2.0
    }

    /// Invariant gradient of `phi` at `g` in the requested form.
    ///
    /// Left form: `(vee(skew(Q)), w Q^T p)` where `skew(Q) = (Q - Q^T)/2`.
    pub fn gradient(&self, g: &GroupElement, form: GradientForm) -> AlgebraVector {
        assert_eq!(self.group, g.group(), "error function applied across groups");
        let r = g.rotation();
        let wpart = Vector3::new(
            0.5 * (r[(2, 1)] - r[(1, 2)]),
            0.5 * (r[(0, 2)] - r[(2, 0)]),
            0.5 * (r[(1, 0)] - r[(0, 1)]),
        );
        let left = match self.group {
            GroupId::So3 => AlgebraVector::from_omega(wpart),
            GroupId::Se3 => AlgebraVector::se3(
                wpart,
                (r.transpose() * g.translation()) * self.translation_weight,
            ),
        };
        match form {
            GradientForm::Left => left,
            // On SO(3) the adjoint is unitary, so both transported forms
            // collapse: the gradient lies along the rotation axis, which the
            // rotation itself fixes. Returning `left` keeps the identities
            // exact instead of within roundoff.
            GradientForm::Right | GradientForm::LeftStar if self.group == GroupId::So3 => left,
            GradientForm::Right => g.inverse().adjoint().transpose_apply(&left),
            GradientForm::LeftStar => {
                let ad_inv = g.inverse().adjoint();
                ad_inv.apply(&ad_inv.transpose_apply(&left))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{exp_map, GroupElement};
    use nalgebra::Matrix3;
    use std::f64::consts::PI;

    fn half_turn_diag() -> GroupElement {
        // 2 n n^T - I for n = (1,1,1)/sqrt(3): built symmetric, so the
        // gradient vanishes exactly, not just to roundoff.
        GroupElement::so3_from_matrix(Matrix3::new(-1.0, 2.0, 2.0, 2.0, -1.0, 2.0, 2.0, 2.0, -1.0) / 3.0)
            .unwrap()
    }

    #[test]
    fn phi_at_identity_is_zero() {
        assert_eq!(ErrorFunction::so3().phi(&GroupElement::identity(GroupId::So3)), 0.0);
        assert_eq!(ErrorFunction::se3(1.0).phi(&GroupElement::identity(GroupId::Se3)), 0.0);
    }

    #[test]
    fn phi_at_half_turn_is_critical_value() {
        let f = ErrorFunction::so3();
        assert_eq!(f.phi(&half_turn_diag()), 2.0);
        assert_eq!(f.critical_value(), 2.0);
    }

    #[test]
    fn phi_se3_translation_term() {
        // Q = I, p = (1,1,1)/3, w = 1: phi = (1/2)(1/3) = 1/6.
        let f = ErrorFunction::se3(1.0);
        let g = GroupElement::se3_from_parts(Matrix3::identity(), Vector3::new(1.0, 1.0, 1.0) / 3.0)
            .unwrap();
        assert!((f.phi(&g) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_vanishes_at_identity_and_half_turns() {
        let f = ErrorFunction::so3();
        assert_eq!(f.gradient(&GroupElement::identity(GroupId::So3), GradientForm::Left).norm(), 0.0);
        assert_eq!(f.gradient(&half_turn_diag(), GradientForm::Left).norm(), 0.0);
        // Half turns about coordinate axes are symmetric matrices too.
        let rx = GroupElement::so3_from_matrix(Matrix3::new(
            1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0,
        ))
        .unwrap();
        assert_eq!(f.gradient(&rx, GradientForm::Left).norm(), 0.0);
        assert_eq!(f.phi(&rx), 2.0);
    }

    #[test]
    fn gradient_about_z_axis() {
        // Rotation by theta about z: grad = (0, 0, sin theta).
        let f = ErrorFunction::so3();
        for theta in [0.3, 1.0, PI / 2.0, 2.5] {
            let g = exp_map(&AlgebraVector::so3(0.0, 0.0, theta));
            let gr = f.gradient(&g, GradientForm::Left);
            assert!((gr.omega() - Vector3::new(0.0, 0.0, theta.sin())).norm() < 1e-14);
        }
    }

    #[test]
    fn gradient_se3_blocks() {
        let f = ErrorFunction::se3(0.5);
        let g = exp_map(&AlgebraVector::se3(
            Vector3::new(0.2, -0.4, 0.7),
            Vector3::new(1.0, 0.5, -2.0),
        ));
        let gr = f.gradient(&g, GradientForm::Left);
        let r = g.rotation();
        let skew = (r - r.transpose()) * 0.5;
        assert!((gr.omega() - Vector3::new(skew[(2, 1)], skew[(0, 2)], skew[(1, 0)])).norm() < 1e-15);
        assert!((gr.linear() - r.transpose() * g.translation() * 0.5).norm() < 1e-15);
    }

    #[test]
    fn finite_difference_left_and_right_forms() {
        let f = ErrorFunction::se3(0.8);
        let g = exp_map(&AlgebraVector::se3(
            Vector3::new(0.5, -0.3, 0.9),
            Vector3::new(-0.7, 1.2, 0.4),
        ));
        let h = 1e-6;
        for k in 0..6 {
            let mut coords = [0.0; 6];
            coords[k] = 1.0;
            let delta = AlgebraVector::from_slice(GroupId::Se3, &coords).unwrap();
            let step = exp_map(&(delta * h));
            let step_back = exp_map(&(delta * -h));
            // Left perturbation g exp(t delta)
            let fd_left = (f.phi(&g.compose(&step).unwrap()) - f.phi(&g.compose(&step_back).unwrap()))
                / (2.0 * h);
            let gl = f.gradient(&g, GradientForm::Left);
            assert!((fd_left - gl.coords()[k]).abs() < 1e-8, "left dir {k}");
            // Right perturbation exp(t delta) g
            let fd_right = (f.phi(&step.compose(&g).unwrap()) - f.phi(&step_back.compose(&g).unwrap()))
                / (2.0 * h);
            let gright = f.gradient(&g, GradientForm::Right);
            assert!((fd_right - gright.coords()[k]).abs() < 1e-8, "right dir {k}");
        }
    }

    #[test]
    fn transported_duality() {
        // <Ad_g xi, grad_right> = <xi, grad_left> for all xi.
        let f = ErrorFunction::se3(1.3);
        let g = exp_map(&AlgebraVector::se3(
            Vector3::new(-0.4, 0.6, 0.2),
            Vector3::new(2.0, -0.5, 1.0),
        ));
        let xi = AlgebraVector::se3(Vector3::new(0.3, 0.1, -0.9), Vector3::new(0.4, -1.1, 0.6));
        let lhs = g.adjoint().apply(&xi).dot(&f.gradient(&g, GradientForm::Right));
        let rhs = xi.dot(&f.gradient(&g, GradientForm::Left));
        assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn lstar_equals_left_on_so3() {
        let f = ErrorFunction::so3();
        let g = exp_map(&AlgebraVector::so3(1.1, -0.7, 0.3));
        let a = f.gradient(&g, GradientForm::Left);
        let b = f.gradient(&g, GradientForm::LeftStar);
        assert_eq!(a, b); // exact, not approximate
        // and it agrees with the generic two-transpose route to roundoff
        let ad_inv = g.inverse().adjoint();
        let generic = ad_inv.apply(&ad_inv.transpose_apply(&a));
        assert!((b - generic).norm() < 1e-14);
    }

    #[test]
    fn lstar_differs_from_left_on_se3() {
        let f = ErrorFunction::se3(1.0);
        let g = exp_map(&AlgebraVector::se3(
            Vector3::new(0.4, 0.2, -0.6),
            Vector3::new(3.0, -1.0, 2.0),
        ));
        let a = f.gradient(&g, GradientForm::Left);
        let b = f.gradient(&g, GradientForm::LeftStar);
        assert!((a - b).norm() > 1e-3);
    }
}
