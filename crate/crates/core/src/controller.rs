//! Pose and alignment errors, the two control signals, and the joint
//! velocity command.

use nalgebra::{DVector, Vector2, Vector3, Vector4, Vector6};
use serde::{Deserialize, Serialize};

use crate::augmentation::AugmentedJacobian;
use crate::chain::{KinematicState, Pose};
use crate::error::{check_dim, Error, Result};
use crate::quat::{representation_jacobian, Representation, UnitQuat};
use crate::singularity::DlsConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlGains {
    pub k_p: f64,
    pub k_o: f64,
    pub k_s: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        Self::uniform(2.0)
    }
}

impl ControlGains {
    pub fn uniform(k: f64) -> Self {
        Self { k_p: k, k_o: k, k_s: k }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("k_p", self.k_p), ("k_o", self.k_o), ("k_s", self.k_s)] {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Config(format!("gain {name} must be > 0, got {k}")));
            }
        }
        Ok(())
    }
}

/// Desired torch state at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskReference {
    /// Position in `F_d` (mm).
    pub p_d: Vector3<f64>,
    /// Orientation relative to `F_d`.
    pub q_d: UnitQuat,
    /// mm/s in `F_d`.
    pub pdot_d: Vector3<f64>,
    /// rad/s in `F_d`.
    pub omega_d: Vector3<f64>,
    /// Desired torch z axis, expressed in `F_ab`.
    pub z_d: Vector3<f64>,
    /// Desired rates about the torch x and y axes (rad/s).
    pub omega_sd: Vector2<f64>,
}

impl TaskReference {
    /// Holds `pose` still, with the torch axis pointing up.
    pub fn hold(pose: &Pose) -> Self {
        Self {
            p_d: pose.p,
            q_d: pose.q,
            pdot_d: Vector3::zeros(),
            omega_d: Vector3::zeros(),
            z_d: Vector3::z(),
            omega_sd: Vector2::zeros(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (self.z_d.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("z_d must be a unit vector, norm is {}", self.z_d.norm())));
        }
        if (self.q_d.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Config("q_d must be a unit quaternion".into()));
        }
        Ok(())
    }

    /// Same reference with velocity feedforward removed.
    pub fn frozen(&self) -> Self {
        Self {
            pdot_d: Vector3::zeros(),
            omega_d: Vector3::zeros(),
            omega_sd: Vector2::zeros(),
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentError {
    pub e_qs: UnitQuat,
    pub e_s: Vector2<f64>,
    /// Misalignment angle in `[0, π]`.
    pub alpha: f64,
    /// The torch axis points exactly away from `z_d`; the rotation axis
    /// was chosen as torch x.
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorState {
    pub e_p: Vector3<f64>,
    pub e_q: UnitQuat,
    pub e_qs: UnitQuat,
    pub e_s: Vector2<f64>,
    pub alpha: f64,
    pub degenerate: bool,
}

impl ErrorState {
    pub fn e_eps(&self) -> Vector3<f64> {
        self.e_q.eps
    }

    pub fn compute(reference: &TaskReference, state: &KinematicState) -> Self {
        let (e_p, e_q) = pose_error(reference, &state.pose);
        let a = alignment_error(&reference.z_d, &state.arm_pose);
        Self {
            e_p,
            e_q,
            e_qs: a.e_qs,
            e_s: a.e_s,
            alpha: a.alpha,
            degenerate: a.degenerate,
        }
    }
}

/// `e_p = p_d − p`, `e_q = q_d ⊗ q⁻¹` with `e_η ≥ 0`.
pub fn pose_error(reference: &TaskReference, x: &Pose) -> (Vector3<f64>, UnitQuat) {
    let e_p = reference.p_d - x.p;
    let e_q = reference.q_d.mul(&x.q.inverse()).normalize().canonical();
    (e_p, e_q)
}

/// Rotation taking the torch z axis onto `z_d`, both seen from the torch.
///
/// `arm_pose` is `F_t` relative to `F_ab`.
pub fn alignment_error(z_d: &Vector3<f64>, arm_pose: &Pose) -> AlignmentError {
    let zb_d = arm_pose.q.inverse().rotate(z_d).normalize();
    // z^b × z^b_d with z^b = [0, 0, 1]
    let cross = Vector3::new(-zb_d.y, zb_d.x, 0.0);
    let c = zb_d.z.clamp(-1.0, 1.0);
    let s = cross.norm();
    let alpha = s.atan2(c);
    // [1 + cos α, sin α r] is parallel to [cos(α/2), sin(α/2) r] and stays
    // well conditioned away from α = π.
    let w = 1.0 + c;
    let n = (w * w + s * s).sqrt();
    if s <= 1e-15 && c < 0.0 || n <= 1e-15 {
        return AlignmentError {
            e_qs: UnitQuat::from_parts_unchecked(0.0, Vector3::x()),
            e_s: Vector2::new(1.0, 0.0),
            alpha: std::f64::consts::PI,
            degenerate: true,
        };
    }
    let e_qs = UnitQuat::from_parts_unchecked(w / n, cross / n);
    AlignmentError {
        e_s: Vector2::new(e_qs.eps.x, e_qs.eps.y),
        e_qs,
        alpha,
        degenerate: false,
    }
}

/// `ū1 = [ṗ_d + K_p e_p; ω_d + K_o e_ε]`.
pub fn primary_control(reference: &TaskReference, e_p: &Vector3<f64>, e_q: &UnitQuat, gains: &ControlGains) -> Vector6<f64> {
    let lin = reference.pdot_d + e_p * gains.k_p;
    let ang = reference.omega_d + e_q.eps * gains.k_o;
    Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z)
}

/// `ū2 = ω_sd + K_s e_s`.
pub fn secondary_control(omega_sd: &Vector2<f64>, e_s: &Vector2<f64>, gains: &ControlGains) -> Vector2<f64> {
    omega_sd + e_s * gains.k_s
}

/// Stacks `[ū1; ū2]`.
pub fn stack_task(u1: &Vector6<f64>, u2: &[f64]) -> DVector<f64> {
    DVector::from_iterator(6 + u2.len(), u1.iter().chain(u2).copied())
}

/// `u = J_A⁺ [ū1; ū2]` using the configured (filtered) inverse.
pub fn joint_velocity_command(j_a: &AugmentedJacobian, u1: &Vector6<f64>, u2: &[f64], dls: &DlsConfig) -> Result<DVector<f64>> {
    check_dim("secondary control signal", j_a.r(), u2.len())?;
    if j_a.is_zero() {
        return Err(Error::ZeroJacobian);
    }
    j_a.solve(dls, &stack_task(u1, u2))
}

/// Right-hand side of the closed-loop error dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRates {
    pub e_p_dot: Vector3<f64>,
    pub omega_tilde: Vector3<f64>,
    pub omega_s_tilde: DVector<f64>,
}

/// `[−K_p e_p; −K_o e_ε; −K_s e_s] − J_A η`.
pub fn closed_loop_error_rates(err: &ErrorState, gains: &ControlGains, j_a: &AugmentedJacobian, eta: &DVector<f64>) -> Result<ErrorRates> {
    let r = j_a.r();
    check_dim("alignment error", r, err.e_s.len())?;
    let d = j_a.apply(eta)?;
    let e_p_dot = -err.e_p * gains.k_p - d.fixed_rows::<3>(0);
    let omega_tilde = -err.e_q.eps * gains.k_o - d.fixed_rows::<3>(3);
    let omega_s_tilde = DVector::from_iterator(r, err.e_s.iter().map(|e| -e * gains.k_s)) - d.rows(6, r);
    Ok(ErrorRates {
        e_p_dot,
        omega_tilde,
        omega_s_tilde,
    })
}

/// Propagation of the alignment error quaternion under a body-frame
/// angular velocity error `[ω̃_s; ω̃_z]`.
pub fn alignment_error_rate(e_qs: &UnitQuat, omega_s_tilde: &Vector2<f64>, omega_z_tilde: f64) -> Vector4<f64> {
    let w = Vector3::new(omega_s_tilde.x, omega_s_tilde.y, omega_z_tilde);
    representation_jacobian(e_qs, Representation::Body) * w
}
