//! Matrix Lie groups SO(3) and SE(3): hat/vee, closed-form exponential and
//! logarithm, adjoint transport, Lie bracket, and group-preserving retraction.
//!
//! Algebra coordinates use the stacked convention
//!
//! ```text
//! so(3): xi = omega              (angular)
//! se(3): xi = (omega, v)         (angular block first, then linear)
//! ```
//!
//! with the usual identifications: `hat` maps coordinates to algebra matrices,
//! left and right trivializations are related by `xi_left = Ad_{g^-1} xi_right`,
//! and both retractions stay on the group exactly because increments pass
//! through the closed-form exponential (Rodrigues on the rotation block, the
//! V-matrix on the translation block).

use nalgebra::{DMatrix, Matrix3, Matrix4, Matrix6, Vector3, Vector6};
use thiserror::Error;

/// Below this angle the exp/log/V-matrix coefficients switch to their
/// second-order Taylor expansions to avoid 0/0 cancellation.
pub const SMALL_ANGLE: f64 = 1e-8;

/// `log_map` refuses rotations whose angle is within this margin of pi:
/// the axis is not determined from the skew part there.
pub const CUT_LOCUS_MARGIN: f64 = 1e-6;

/// Tolerance for membership checks (skew-symmetry in `vee`, orthonormality
/// in the matrix constructors).
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupId {
    So3,
    Se3,
}

impl GroupId {
    /// Dimension of the Lie algebra (3 or 6).
    pub fn dim(self) -> usize {
        match self {
            GroupId::So3 => 3,
            GroupId::Se3 => 6,
        }
    }
}

/// Frame of an invariant vector field or retraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Left,
    Right,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("group mismatch: expected {expected:?}, got {found:?}")]
    GroupMismatch { expected: GroupId, found: GroupId },
    #[error("matrix is not in the algebra: asymmetry {asymmetry:.3e} exceeds {MEMBERSHIP_TOL:.0e}")]
    NotInAlgebra { asymmetry: f64 },
    #[error("matrix is not in the group: orthonormality defect {defect:.3e} exceeds {MEMBERSHIP_TOL:.0e}")]
    NotInGroup { defect: f64 },
    #[error("rotation angle {angle} is within {CUT_LOCUS_MARGIN:.0e} of the cut locus at pi; the logarithm is undefined there")]
    CutLocus { angle: f64 },
    #[error("wrong coordinate dimension for {group:?}: expected {expected}, got {found}")]
    DimensionMismatch {
        group: GroupId,
        expected: usize,
        found: usize,
    },
}

// ---------------------------------------------------------------------------
// Algebra coordinates
// ---------------------------------------------------------------------------

/// Lie algebra element in coordinates. Stored as a 6-vector `(omega, v)`;
/// the linear block is identically zero for so(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraVector {
    group: GroupId,
    c: Vector6<f64>,
}

impl AlgebraVector {
    pub fn zero(group: GroupId) -> Self {
        AlgebraVector { group, c: Vector6::zeros() }
    }

    pub fn so3(wx: f64, wy: f64, wz: f64) -> Self {
        AlgebraVector { group: GroupId::So3, c: Vector6::new(wx, wy, wz, 0.0, 0.0, 0.0) }
    }

    pub fn from_omega(w: Vector3<f64>) -> Self {
        Self::so3(w.x, w.y, w.z)
    }

    pub fn se3(omega: Vector3<f64>, v: Vector3<f64>) -> Self {
        AlgebraVector {
            group: GroupId::Se3,
            c: Vector6::new(omega.x, omega.y, omega.z, v.x, v.y, v.z),
        }
    }

    /// Build from `group.dim()` coordinates (angular block first).
    pub fn from_slice(group: GroupId, coords: &[f64]) -> Result<Self, LieError> {
        if coords.len() != group.dim() {
            return Err(LieError::DimensionMismatch {
                group,
                expected: group.dim(),
                found: coords.len(),
            });
        }
        let mut c = Vector6::zeros();
        c.as_mut_slice()[..coords.len()].copy_from_slice(coords);
        Ok(AlgebraVector { group, c })
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn dim(&self) -> usize {
        self.group.dim()
    }

    /// The `dim()` coordinates, angular block first.
    pub fn coords(&self) -> &[f64] {
        &self.c.as_slice()[..self.dim()]
    }

    pub fn omega(&self) -> Vector3<f64> {
        self.c.fixed_rows::<3>(0).into()
    }

    /// Linear block; zero for so(3).
    pub fn linear(&self) -> Vector3<f64> {
        self.c.fixed_rows::<3>(3).into()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.group, other.group, "algebra vectors from different groups");
        self.c.dot(&other.c)
    }

    pub fn norm_squared(&self) -> f64 {
        self.c.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.c.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    pub(crate) fn raw(&self) -> &Vector6<f64> {
        &self.c
    }

    pub(crate) fn from_raw(group: GroupId, c: Vector6<f64>) -> Self {
        AlgebraVector { group, c }
    }
}

impl std::ops::Add for AlgebraVector {
    type Output = AlgebraVector;
    fn add(self, rhs: AlgebraVector) -> AlgebraVector {
        assert_eq!(self.group, rhs.group, "algebra vectors from different groups");
        AlgebraVector { group: self.group, c: self.c + rhs.c }
    }
}

impl std::ops::Sub for AlgebraVector {
    type Output = AlgebraVector;
    fn sub(self, rhs: AlgebraVector) -> AlgebraVector {
        assert_eq!(self.group, rhs.group, "algebra vectors from different groups");
        AlgebraVector { group: self.group, c: self.c - rhs.c }
    }
}

impl std::ops::Neg for AlgebraVector {
    type Output = AlgebraVector;
    fn neg(self) -> AlgebraVector {
        AlgebraVector { group: self.group, c: -self.c }
    }
}

impl std::ops::Mul<f64> for AlgebraVector {
    type Output = AlgebraVector;
    fn mul(self, k: f64) -> AlgebraVector {
        AlgebraVector { group: self.group, c: self.c * k }
    }
}

// ---------------------------------------------------------------------------
// Group elements
// ---------------------------------------------------------------------------

/// Element of SO(3) or SE(3). Stored as rotation + translation; the
/// translation is identically zero for SO(3). Constructors from raw matrices
/// validate group membership to [`MEMBERSHIP_TOL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    group: GroupId,
    r: Matrix3<f64>,
    p: Vector3<f64>,
}

impl GroupElement {
    pub fn identity(group: GroupId) -> Self {
        GroupElement { group, r: Matrix3::identity(), p: Vector3::zeros() }
    }

    pub fn so3_from_matrix(r: Matrix3<f64>) -> Result<Self, LieError> {
        let defect = rotation_defect(&r);
        if defect > MEMBERSHIP_TOL {
            return Err(LieError::NotInGroup { defect });
        }
        Ok(GroupElement { group: GroupId::So3, r, p: Vector3::zeros() })
    }

    pub fn se3_from_parts(r: Matrix3<f64>, p: Vector3<f64>) -> Result<Self, LieError> {
        let defect = rotation_defect(&r);
        if defect > MEMBERSHIP_TOL {
            return Err(LieError::NotInGroup { defect });
        }
        Ok(GroupElement { group: GroupId::Se3, r, p })
    }

    pub(crate) fn new_unchecked(group: GroupId, r: Matrix3<f64>, p: Vector3<f64>) -> Self {
        GroupElement { group, r, p }
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.r
    }

    /// Translation part; zero for SO(3).
    pub fn translation(&self) -> &Vector3<f64> {
        &self.p
    }

    /// 4x4 homogeneous form (SO(3) embeds with zero translation).
    pub fn homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.p);
        m
    }

    /// Group product. Rejects operands from different groups.
    pub fn compose(&self, other: &Self) -> Result<Self, LieError> {
        if self.group != other.group {
            return Err(LieError::GroupMismatch { expected: self.group, found: other.group });
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        GroupElement {
            group: self.group,
            r: self.r * other.r,
            p: self.p + self.r * other.p,
        }
    }

    /// Closed-form inverse: `(R, p)^-1 = (R^T, -R^T p)`.
    pub fn inverse(&self) -> Self {
        let rt = self.r.transpose();
        GroupElement { group: self.group, r: rt, p: -(rt * self.p) }
    }

    /// Adjoint representation as a matrix on algebra coordinates:
    /// `Ad_Q = Q` on so(3); on se(3) `Ad_(R,p) (w, v) = (R w, hat(p) R w + R v)`.
    pub fn adjoint(&self) -> AdjointMatrix {
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.r);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.r);
        if self.group == GroupId::Se3 {
            m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(hat3(&self.p) * self.r));
        }
        AdjointMatrix { group: self.group, m }
    }

    /// `||R^T R - I||_F` plus `|det R - 1|`; zero for exact members.
    pub fn orthonormality_defect(&self) -> f64 {
        rotation_defect(&self.r)
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().all(|x| x.is_finite()) && self.p.iter().all(|x| x.is_finite())
    }
}

fn rotation_defect(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).norm() + (r.determinant() - 1.0).abs()
}

// ---------------------------------------------------------------------------
// Adjoint matrix
// ---------------------------------------------------------------------------

/// Adjoint (or its relatives) as a linear map on algebra coordinates.
/// Internally a 6x6 with block-diagonal padding for so(3), so applying it
/// preserves the zero linear block.
#[derive(Debug, Clone, Copy)]
pub struct AdjointMatrix {
    group: GroupId,
    m: Matrix6<f64>,
}

impl AdjointMatrix {
    pub fn group(&self) -> GroupId {
        self.group
    }

    /// Dense `dim x dim` copy (3x3 for so(3), 6x6 for se(3)).
    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.group.dim();
        DMatrix::from_fn(d, d, |i, j| self.m[(i, j)])
    }

    pub fn apply(&self, xi: &AlgebraVector) -> AlgebraVector {
        assert_eq!(self.group, xi.group(), "adjoint applied across groups");
        AlgebraVector::from_raw(self.group, self.m * xi.raw())
    }

    /// Apply the matrix transpose (the metric dual `Ad*` under the Euclidean
    /// identification of the algebra with its dual).
    pub fn transpose_apply(&self, xi: &AlgebraVector) -> AlgebraVector {
        assert_eq!(self.group, xi.group(), "adjoint applied across groups");
        AlgebraVector::from_raw(self.group, self.m.transpose() * xi.raw())
    }
}

// ---------------------------------------------------------------------------
// hat / vee
// ---------------------------------------------------------------------------

pub(crate) fn hat3(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Algebra matrix of `xi`: 3x3 skew for so(3); for se(3) the 4x4
/// `[[hat(omega), v], [0, 0]]`.
pub fn hat(xi: &AlgebraVector) -> DMatrix<f64> {
    let k = hat3(&xi.omega());
    match xi.group() {
        GroupId::So3 => DMatrix::from_fn(3, 3, |i, j| k[(i, j)]),
        GroupId::Se3 => {
            let v = xi.linear();
            DMatrix::from_fn(4, 4, |i, j| match (i, j) {
                (0..=2, 0..=2) => k[(i, j)],
                (0..=2, 3) => v[i],
                _ => 0.0,
            })
        }
    }
}

/// Inverse of [`hat`]. Validates the algebra structure (skew-symmetric
/// rotation block; zero bottom row for se(3)) to [`MEMBERSHIP_TOL`].
pub fn vee(group: GroupId, m: &DMatrix<f64>) -> Result<AlgebraVector, LieError> {
    let side = match group {
        GroupId::So3 => 3,
        GroupId::Se3 => 4,
    };
    if m.nrows() != side || m.ncols() != side {
        return Err(LieError::DimensionMismatch { group, expected: side, found: m.nrows().max(m.ncols()) });
    }
    let mut asymmetry: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            asymmetry = asymmetry.max((m[(i, j)] + m[(j, i)]).abs());
        }
    }
    if group == GroupId::Se3 {
        for j in 0..4 {
            asymmetry = asymmetry.max(m[(3, j)].abs());
        }
    }
    if asymmetry > MEMBERSHIP_TOL {
        return Err(LieError::NotInAlgebra { asymmetry });
    }
    let w = Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]);
    Ok(match group {
        GroupId::So3 => AlgebraVector::from_omega(w),
        GroupId::Se3 => AlgebraVector::se3(w, Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)])),
    })
}

// ---------------------------------------------------------------------------
// exp / log
// ---------------------------------------------------------------------------

/// `1 - cos(th)` as `2 sin^2(th/2)`: the direct subtraction loses
/// `~eps/th^2` relative precision for small angles, the identity none.
fn one_minus_cos(th: f64) -> f64 {
    let s = (0.5 * th).sin();
    2.0 * s * s
}

fn exp_so3(w: &Vector3<f64>) -> Matrix3<f64> {
    let th = w.norm();
    let k = hat3(w);
    let (a, b) = if th < SMALL_ANGLE {
        let t2 = th * th;
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        (th.sin() / th, one_minus_cos(th) / (th * th))
    };
    Matrix3::identity() + k * a + k * k * b
}

/// The translation factor of the se(3) exponential:
/// `V = I + (1-cos)/th^2 K + (th-sin)/th^3 K^2`.
fn v_so3(w: &Vector3<f64>) -> Matrix3<f64> {
    let th = w.norm();
    let k = hat3(w);
    let (b, c) = if th < SMALL_ANGLE {
        let t2 = th * th;
        (0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0)
    } else {
        let t2 = th * th;
        (one_minus_cos(th) / t2, (th - th.sin()) / (t2 * th))
    };
    Matrix3::identity() + k * b + k * k * c
}

fn v_inv_so3(w: &Vector3<f64>) -> Matrix3<f64> {
    let th = w.norm();
    let k = hat3(w);
    // Coefficient of K^2 in V^-1 = I - K/2 + coef K^2. The closed form
    // (1 - th sin/(2(1-cos)))/th^2 cancels badly for small th, so switch to
    // its series 1/12 + th^2/720 + th^4/30240 below th = 1e-2.
    let coef = if th < 1e-2 {
        let t2 = th * th;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        (1.0 - th * th.sin() / (2.0 * one_minus_cos(th))) / (th * th)
    };
    Matrix3::identity() - k * 0.5 + k * k * coef
}

/// Group exponential. Rodrigues on the rotation block; the se(3) translation
/// goes through the V-matrix. Exact on one-parameter subgroups.
pub fn exp_map(xi: &AlgebraVector) -> GroupElement {
    let w = xi.omega();
    let r = exp_so3(&w);
    match xi.group() {
        GroupId::So3 => GroupElement::new_unchecked(GroupId::So3, r, Vector3::zeros()),
        GroupId::Se3 => {
            let p = v_so3(&w) * xi.linear();
            GroupElement::new_unchecked(GroupId::Se3, r, p)
        }
    }
}

fn log_so3(r: &Matrix3<f64>) -> Result<Vector3<f64>, LieError> {
    // s = vee of the skew part has norm sin(theta); trace gives cos(theta).
    let s = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) * 0.5;
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let th = s.norm().atan2(cos);
    if th >= std::f64::consts::PI - CUT_LOCUS_MARGIN {
        return Err(LieError::CutLocus { angle: th });
    }
    let scale = if th < SMALL_ANGLE { 1.0 + th * th / 6.0 } else { th / th.sin() };
    Ok(s * scale)
}

/// Group logarithm. Errors when the rotation angle is within
/// [`CUT_LOCUS_MARGIN`] of pi (cut locus: axis undetermined).
pub fn log_map(g: &GroupElement) -> Result<AlgebraVector, LieError> {
    let w = log_so3(g.rotation())?;
    Ok(match g.group() {
        GroupId::So3 => AlgebraVector::from_omega(w),
        GroupId::Se3 => AlgebraVector::se3(w, v_inv_so3(&w) * g.translation()),
    })
}

// ---------------------------------------------------------------------------
// bracket / retraction
// ---------------------------------------------------------------------------

/// Lie bracket in coordinates (matrix commutator of the hat forms):
/// cross product on so(3); on se(3)
/// `[(wa,va),(wb,vb)] = (wa x wb, wa x vb - wb x va)`.
pub fn bracket(a: &AlgebraVector, b: &AlgebraVector) -> AlgebraVector {
    assert_eq!(a.group(), b.group(), "bracket of vectors from different groups");
    let w = a.omega().cross(&b.omega());
    match a.group() {
        GroupId::So3 => AlgebraVector::from_omega(w),
        GroupId::Se3 => {
            let v = a.omega().cross(&b.linear()) - b.omega().cross(&a.linear());
            AlgebraVector::se3(w, v)
        }
    }
}

/// One integrator step along an invariant field: `g exp(dt xi)` for the left
/// frame, `exp(dt xi) g` for the right. Group-preserving by construction.
pub fn retract(g: &GroupElement, xi: &AlgebraVector, frame: Frame, dt: f64) -> GroupElement {
    assert!(dt > 0.0, "retraction step dt must be positive");
    assert_eq!(g.group(), xi.group(), "retraction across groups");
    let step = exp_map(&(*xi * dt));
    match frame {
        Frame::Left => g.mul_unchecked(&step),
        Frame::Right => step.mul_unchecked(g),
    }
}
