//! Kinematic model of the positioner + arm chain.
//!
//! Frames: the arm base `F_ab` is inertial. The positioner base `F_tb` is
//! fixed in `F_ab`; its joints carry the deposition frame `F_d` (on the
//! workpiece). The arm joints carry the flange, and the tool offset places
//! the torch tip frame `F_t`. All lengths are millimetres.
//!
//! Twists are ordered `[linear; angular]` throughout.

use nalgebra::{DVector, Dyn, Matrix3, Matrix6, OMatrix, Vector3, U6};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::quat::{orthonormality_defect, UnitQuat};

/// A 6×m Jacobian block with dynamic column count.
pub type Matrix6xX = OMatrix<f64, U6, Dyn>;

/// Rigid transform: position plus unit quaternion orientation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub p: Vector3<f64>,
    pub q: UnitQuat,
}

impl Default for Pose {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        p: Vector3::new(0.0, 0.0, 0.0),
        q: UnitQuat::IDENTITY,
    };

    pub fn new(p: Vector3<f64>, q: UnitQuat) -> Self {
        Self { p, q }
    }

    pub fn from_translation(p: Vector3<f64>) -> Self {
        Self { p, q: UnitQuat::IDENTITY }
    }

    pub fn from_rotation(q: UnitQuat) -> Self {
        Self { p: Vector3::zeros(), q }
    }

    /// `self ∘ rhs`: `rhs` is expressed in the frame described by `self`.
    pub fn compose(&self, rhs: &Pose) -> Pose {
        Pose {
            p: self.p + self.q.rotate(&rhs.p),
            q: self.q.mul(&rhs.q),
        }
    }

    pub fn inverse(&self) -> Pose {
        let qi = self.q.inverse();
        Pose {
            p: -qi.rotate(&self.p),
            q: qi,
        }
    }

    pub fn transform_point(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.p + self.q.rotate(v)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.q.to_rotation_matrix()
    }

    fn normalized(&self) -> Pose {
        Pose { p: self.p, q: self.q.normalize() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// One joint: a fixed transform from the previous link frame, then motion
/// about (or along) `axis`, expressed in the frame after the fixed transform.
#[derive(Clone, Debug, PartialEq)]
pub struct JointEntry {
    pub kind: JointKind,
    pub axis: Vector3<f64>,
    pub origin: Pose,
}

impl JointEntry {
    pub fn revolute(axis: Vector3<f64>, origin: Pose) -> Self {
        Self { kind: JointKind::Revolute, axis: axis.normalize(), origin }
    }

    pub fn prismatic(axis: Vector3<f64>, origin: Pose) -> Self {
        Self { kind: JointKind::Prismatic, axis: axis.normalize(), origin }
    }

    fn motion(&self, value: f64) -> Pose {
        match self.kind {
            JointKind::Revolute => Pose::from_rotation(UnitQuat::from_axis_angle(&self.axis, value)),
            JointKind::Prismatic => Pose::from_translation(self.axis * value),
        }
    }
}

/// Joint positions, positioner joints first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointConfig {
    pub table: Vec<f64>,
    pub arm: Vec<f64>,
}

impl JointConfig {
    pub fn new(table: Vec<f64>, arm: Vec<f64>) -> Self {
        Self { table, arm }
    }

    pub fn zeros(chain: &ChainDescription) -> Self {
        Self {
            table: vec![0.0; chain.table_dof()],
            arm: vec![0.0; chain.arm_dof()],
        }
    }

    /// Splits a stacked `[θ_t; θ_a]` vector.
    pub fn from_vector(theta: &DVector<f64>, table_dof: usize) -> Self {
        let s = theta.as_slice();
        Self {
            table: s[..table_dof].to_vec(),
            arm: s[table_dof..].to_vec(),
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.table.iter().chain(&self.arm).copied())
    }

    pub fn len(&self) -> usize {
        self.table.len() + self.arm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Which velocity a [`JacobianMatrix`] produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JacobianFrame {
    /// Torch velocity relative to `F_d`, expressed in `F_d`.
    Deposition,
    /// Torch velocity relative to `F_d`, expressed in `F_t`.
    Body,
}

impl JacobianFrame {
    fn name(self) -> &'static str {
        match self {
            JacobianFrame::Deposition => "deposition-frame",
            JacobianFrame::Body => "body",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobianMatrix {
    pub entries: Matrix6xX,
    pub frame: JacobianFrame,
    /// Number of leading (positioner) columns.
    pub table_dof: usize,
}

impl JacobianMatrix {
    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    /// Positioner block `J1`.
    pub fn table_block(&self) -> Matrix6xX {
        self.entries.columns(0, self.table_dof).into_owned()
    }

    /// Arm block `J2`.
    pub fn arm_block(&self) -> Matrix6xX {
        self.entries
            .columns(self.table_dof, self.entries.ncols() - self.table_dof)
            .into_owned()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        row_sum_norm(self.entries.as_slice(), 6, self.entries.ncols())
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn row_sum_norm(col_major: &[f64], nrows: usize, ncols: usize) -> f64 {
    (0..nrows)
        .map(|i| (0..ncols).map(|j| col_major[i + j * nrows].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Geometric description of the positioner + arm chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainDescription {
    pub table_joints: Vec<JointEntry>,
    pub arm_joints: Vec<JointEntry>,
    /// Pose of `F_tb` in `F_ab`.
    pub arm_base_to_table_base: Pose,
    /// Pose of `F_d` in the last positioner link frame.
    pub table_to_deposition: Pose,
    /// Pose of `F_t` in the arm flange frame.
    pub tool_offset: Pose,
    /// Seed configuration for solving the first reference pose.
    pub home: Option<JointConfig>,
}

/// Everything the controller needs at one joint configuration.
#[derive(Clone, Debug)]
pub struct KinematicState {
    /// `F_t` relative to `F_d` (canonical quaternion).
    pub pose: Pose,
    /// `F_t` relative to `F_ab`.
    pub arm_pose: Pose,
    /// `F_d` relative to `F_ab`.
    pub deposition_pose: Pose,
    pub jacobian: JacobianMatrix,
}

struct AxisFrame {
    kind: JointKind,
    axis: Vector3<f64>,
    point: Vector3<f64>,
}

fn walk(base: Pose, joints: &[JointEntry], values: &[f64], axes: &mut Vec<AxisFrame>) -> Pose {
    let mut t = base;
    for (j, &v) in joints.iter().zip(values) {
        t = t.compose(&j.origin);
        axes.push(AxisFrame {
            kind: j.kind,
            axis: t.q.rotate(&j.axis),
            point: t.p,
        });
        t = t.compose(&j.motion(v));
    }
    t
}

fn column(kind: JointKind, axis: &Vector3<f64>, point: &Vector3<f64>, tip: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    match kind {
        JointKind::Revolute => (axis.cross(&(tip - point)), *axis),
        JointKind::Prismatic => (*axis, Vector3::zeros()),
    }
}

impl ChainDescription {
    pub fn table_dof(&self) -> usize {
        self.table_joints.len()
    }

    pub fn arm_dof(&self) -> usize {
        self.arm_joints.len()
    }

    pub fn dof(&self) -> usize {
        self.table_dof() + self.arm_dof()
    }

    /// Checks rigidity of every fixed transform and unit joint axes.
    pub fn validate(&self) -> Result<()> {
        let fixed = self
            .table_joints
            .iter()
            .chain(&self.arm_joints)
            .map(|j| &j.origin)
            .chain([&self.arm_base_to_table_base, &self.table_to_deposition, &self.tool_offset]);
        for pose in fixed {
            let d = orthonormality_defect(&pose.rotation_matrix());
            if d > 1e-10 {
                return Err(Error::NotOrthonormal { deviation: d });
            }
            if !pose.p.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("link translation"));
            }
        }
        for j in self.table_joints.iter().chain(&self.arm_joints) {
            if ((j.axis.norm() - 1.0).abs()) > 1e-10 {
                return Err(Error::Config("joint axis is not a unit vector".into()));
            }
        }
        if self.arm_dof() == 0 {
            return Err(Error::Config("chain has no arm joints".into()));
        }
        if let Some(home) = &self.home {
            self.check_config(home)?;
        }
        Ok(())
    }

    pub fn check_config(&self, theta: &JointConfig) -> Result<()> {
        check_dim("table joints", self.table_dof(), theta.table.len())?;
        check_dim("arm joints", self.arm_dof(), theta.arm.len())
    }

    pub fn home_config(&self) -> JointConfig {
        self.home.clone().unwrap_or_else(|| JointConfig::zeros(self))
    }

    /// Pose of `F_d` in `F_ab`.
    pub fn deposition_frame_pose(&self, theta_t: &[f64]) -> Result<Pose> {
        check_dim("table joints", self.table_dof(), theta_t.len())?;
        let mut scratch = Vec::with_capacity(self.table_dof());
        let end = walk(self.arm_base_to_table_base, &self.table_joints, theta_t, &mut scratch);
        Ok(end.compose(&self.table_to_deposition).normalized())
    }

    /// Pose of `F_t` relative to `F_ab`, arm joints only.
    pub fn arm_forward_kinematics(&self, theta_a: &[f64]) -> Result<Pose> {
        check_dim("arm joints", self.arm_dof(), theta_a.len())?;
        let mut scratch = Vec::with_capacity(self.arm_dof());
        let flange = walk(Pose::IDENTITY, &self.arm_joints, theta_a, &mut scratch);
        Ok(flange.compose(&self.tool_offset).normalized())
    }

    /// Pose of `F_t` relative to `F_d`, with `eta >= 0`.
    pub fn forward_kinematics(&self, theta: &JointConfig) -> Result<Pose> {
        self.check_config(theta)?;
        let t_ad = self.deposition_frame_pose(&theta.table)?;
        let t_at = self.arm_forward_kinematics(&theta.arm)?;
        let mut pose = t_ad.inverse().compose(&t_at).normalized();
        pose.q = pose.q.canonical();
        Ok(pose)
    }

    /// Deposition-frame Jacobian `J = [J1 J2]`.
    pub fn system_jacobian(&self, theta: &JointConfig) -> Result<JacobianMatrix> {
        Ok(self.evaluate(theta)?.jacobian)
    }

    /// Forward kinematics and Jacobian in one pass.
    pub fn evaluate(&self, theta: &JointConfig) -> Result<KinematicState> {
        self.check_config(theta)?;
        let mut table_axes = Vec::with_capacity(self.table_dof());
        let t_ad = walk(self.arm_base_to_table_base, &self.table_joints, &theta.table, &mut table_axes)
            .compose(&self.table_to_deposition)
            .normalized();
        let mut arm_axes = Vec::with_capacity(self.arm_dof());
        let t_at = walk(Pose::IDENTITY, &self.arm_joints, &theta.arm, &mut arm_axes)
            .compose(&self.tool_offset)
            .normalized();

        let r_da = t_ad.rotation_matrix().transpose();
        let tip = t_at.p;
        let mut j = Matrix6xX::zeros(self.dof());
        // Positioner motion moves F_d under a torch that is fixed in F_ab, so
        // its columns carry the opposite sign.
        for (c, a) in table_axes.iter().enumerate() {
            let (lin, ang) = column(a.kind, &a.axis, &a.point, &tip);
            j.fixed_view_mut::<3, 1>(0, c).copy_from(&(-(r_da * lin)));
            j.fixed_view_mut::<3, 1>(3, c).copy_from(&(-(r_da * ang)));
        }
        for (i, a) in arm_axes.iter().enumerate() {
            let c = self.table_dof() + i;
            let (lin, ang) = column(a.kind, &a.axis, &a.point, &tip);
            j.fixed_view_mut::<3, 1>(0, c).copy_from(&(r_da * lin));
            j.fixed_view_mut::<3, 1>(3, c).copy_from(&(r_da * ang));
        }
        let mut pose = t_ad.inverse().compose(&t_at).normalized();
        pose.q = pose.q.canonical();
        Ok(KinematicState {
            pose,
            arm_pose: t_at,
            deposition_pose: t_ad,
            jacobian: JacobianMatrix {
                entries: j,
                frame: JacobianFrame::Deposition,
                table_dof: self.table_dof(),
            },
        })
    }

    /// Upper bound on every Jacobian column norm for a revolute-only chain:
    /// the longest lever arm plus one (the unit angular part).
    pub fn column_norm_bound(&self) -> f64 {
        self.reach() + 1.0
    }

    /// Upper bound `c0` on the infinity norm of the augmented Jacobian.
    ///
    /// Linear rows hold at most one lever arm per column, angular rows at
    /// most one unit entry per column.
    pub fn augmented_jacobian_bound(&self) -> f64 {
        self.dof() as f64 * self.reach().max(1.0)
    }

    /// Sum of every fixed translation in the chain: no two points on it can
    /// be farther apart than this.
    pub fn reach(&self) -> f64 {
        self.table_joints
            .iter()
            .chain(&self.arm_joints)
            .map(|j| j.origin.p.norm())
            .chain([
                self.arm_base_to_table_base.p.norm(),
                self.table_to_deposition.p.norm(),
                self.tool_offset.p.norm(),
            ])
            .sum()
    }
}

/// `Ω = blockdiag(R, R)`.
pub fn extended_rotation(r: &Matrix3<f64>) -> Matrix6<f64> {
    let mut o = Matrix6::zeros();
    o.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    o.fixed_view_mut::<3, 3>(3, 3).copy_from(r);
    o
}

pub(crate) fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    let d = orthonormality_defect(r);
    if d > 1e-9 || !d.is_finite() {
        Err(Error::NotOrthonormal { deviation: d })
    } else {
        Ok(())
    }
}

/// Re-expresses a deposition-frame Jacobian in torch (body) coordinates,
/// `J_b = Ωᵀ J`, where `r` is the rotation of `F_t` relative to `F_d`.
pub fn body_jacobian(j: &JacobianMatrix, r: &Matrix3<f64>) -> Result<JacobianMatrix> {
    if j.frame != JacobianFrame::Deposition {
        return Err(Error::WrongRepresentation {
            expected: JacobianFrame::Deposition.name(),
            found: j.frame.name(),
        });
    }
    check_rotation(r)?;
    Ok(JacobianMatrix {
        entries: extended_rotation(r).transpose() * &j.entries,
        frame: JacobianFrame::Body,
        table_dof: j.table_dof,
    })
}

/// Arm body Jacobian `J_b2 = Ωᵀ J2`: torch twist relative to `F_ab`,
/// expressed in `F_t`, per arm joint.
pub fn arm_body_jacobian(j: &JacobianMatrix, r: &Matrix3<f64>) -> Result<Matrix6xX> {
    Ok(body_jacobian(j, r)?.arm_block())
}

/// Applies the inverse representation change, `Ω J_b`. Used to undo
/// [`body_jacobian`].
pub fn rotate_jacobian(entries: &Matrix6xX, r: &Matrix3<f64>) -> Result<Matrix6xX> {
    check_rotation(r)?;
    Ok(extended_rotation(r) * entries)
}

/// A 2-DOF tilt/turn positioner in front of a 6R spherical-wrist arm of
/// roughly 90 kg payload class. The torch points down at `home`, with the
/// tip frame's z axis pointing up, away from the workpiece.
pub fn default_chain() -> ChainDescription {
    let t = |x: f64, y: f64, z: f64| Pose::from_translation(Vector3::new(x, y, z));
    ChainDescription {
        table_joints: vec![
            JointEntry::revolute(Vector3::y(), t(0.0, 0.0, 700.0)),
            JointEntry::revolute(Vector3::z(), t(0.0, 0.0, 150.0)),
        ],
        arm_joints: vec![
            JointEntry::revolute(Vector3::z(), Pose::IDENTITY),
            JointEntry::revolute(Vector3::y(), t(350.0, 0.0, 675.0)),
            JointEntry::revolute(Vector3::y(), t(0.0, 0.0, 1150.0)),
            JointEntry::revolute(Vector3::x(), t(620.0, 0.0, -40.0)),
            JointEntry::revolute(Vector3::y(), t(600.0, 0.0, 0.0)),
            JointEntry::revolute(Vector3::x(), t(215.0, 0.0, 0.0)),
        ],
        arm_base_to_table_base: t(1500.0, 0.0, 0.0),
        table_to_deposition: t(0.0, 0.0, 20.0),
        tool_offset: Pose::new(
            Vector3::new(350.0, 0.0, 0.0),
            UnitQuat::from_axis_angle(&Vector3::y(), -std::f64::consts::FRAC_PI_2),
        ),
        home: Some(JointConfig::new(vec![0.0, 0.0], DEFAULT_HOME_ARM.to_vec())),
    }
}

const DEFAULT_HOME_ARM: [f64; 6] = [0.0, -0.015, 0.28, 0.0, 1.3, 0.0];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn one_joint_chain() -> ChainDescription {
        ChainDescription {
            table_joints: vec![],
            arm_joints: vec![JointEntry::revolute(Vector3::z(), Pose::IDENTITY)],
            arm_base_to_table_base: Pose::IDENTITY,
            table_to_deposition: Pose::IDENTITY,
            tool_offset: Pose::from_translation(Vector3::x()),
            home: None,
        }
    }

    #[test]
    fn identity_chain_at_zero() {
        let chain = ChainDescription {
            table_joints: vec![JointEntry::revolute(Vector3::y(), Pose::IDENTITY)],
            arm_joints: vec![JointEntry::revolute(Vector3::z(), Pose::IDENTITY)],
            arm_base_to_table_base: Pose::IDENTITY,
            table_to_deposition: Pose::IDENTITY,
            tool_offset: Pose::IDENTITY,
            home: None,
        };
        let pose = chain.forward_kinematics(&JointConfig::zeros(&chain)).unwrap();
        assert_eq!(pose.p, Vector3::zeros());
        assert_eq!(pose.q.to_array(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn single_revolute_joint_quarter_turn() {
        let chain = one_joint_chain();
        let pose = chain.arm_forward_kinematics(&[FRAC_PI_2]).unwrap();
        assert_relative_eq!(pose.p, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
        let full = chain.forward_kinematics(&JointConfig::new(vec![], vec![FRAC_PI_2])).unwrap();
        assert_relative_eq!(full.p, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let chain = one_joint_chain();
        let err = chain.forward_kinematics(&JointConfig::new(vec![0.0], vec![0.0])).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
        assert!(chain.arm_forward_kinematics(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn body_jacobian_identity_and_inverse() {
        let chain = one_joint_chain();
        let j = chain.system_jacobian(&JointConfig::new(vec![], vec![0.3])).unwrap();
        let jb = body_jacobian(&j, &Matrix3::identity()).unwrap();
        assert_eq!(jb.entries, j.entries);
        let r = UnitQuat::from_axis_angle(&Vector3::new(1.0, 2.0, 3.0), 0.7).to_rotation_matrix();
        let jb = body_jacobian(&j, &r).unwrap();
        let back = rotate_jacobian(&jb.entries, &r).unwrap();
        assert_relative_eq!(back, j.entries, epsilon = 1e-12);
        assert!(body_jacobian(&jb, &r).is_err());
    }

    #[test]
    fn body_jacobian_rejects_non_rotation() {
        let chain = one_joint_chain();
        let j = chain.system_jacobian(&JointConfig::new(vec![], vec![0.3])).unwrap();
        let err = body_jacobian(&j, &(Matrix3::identity() * 1.1)).unwrap_err();
        assert!(matches!(err, Error::NotOrthonormal { .. }));
    }

    #[test]
    fn prismatic_joint_column() {
        let chain = ChainDescription {
            table_joints: vec![],
            arm_joints: vec![JointEntry::prismatic(Vector3::x(), Pose::IDENTITY)],
            arm_base_to_table_base: Pose::IDENTITY,
            table_to_deposition: Pose::IDENTITY,
            tool_offset: Pose::IDENTITY,
            home: None,
        };
        let s = chain.evaluate(&JointConfig::new(vec![], vec![2.0])).unwrap();
        assert_relative_eq!(s.pose.p, Vector3::new(2.0, 0.0, 0.0));
        assert_eq!(s.jacobian.entries.column(0).as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn validate_rejects_bad_axis() {
        let mut chain = one_joint_chain();
        chain.arm_joints[0].axis = Vector3::new(0.0, 0.0, 2.0);
        assert!(chain.validate().is_err());
    }
}
