//! Unit quaternions in scalar-first `[eta, epsilon]` form.
//!
//! The crate keeps its own small quaternion type instead of reusing
//! `nalgebra::UnitQuaternion` so that the scalar/vector split used by the
//! control law is explicit at every call site. Conversions to rotation
//! matrices go through nalgebra.

use nalgebra::{Matrix3, Matrix4x3, Rotation3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

/// Unit quaternion `q = [eta, epsilon]`, `eta² + |epsilon|² = 1`.
///
/// `q` and `-q` describe the same rotation. Nothing here canonicalizes
/// implicitly; call [`UnitQuat::canonical`] where a unique sign is needed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct UnitQuat {
    pub eta: f64,
    pub eps: Vector3<f64>,
}

impl Default for UnitQuat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl From<[f64; 4]> for UnitQuat {
    fn from(a: [f64; 4]) -> Self {
        Self::new_normalize(a[0], Vector3::new(a[1], a[2], a[3]))
    }
}

impl From<UnitQuat> for [f64; 4] {
    fn from(q: UnitQuat) -> Self {
        q.to_array()
    }
}

impl UnitQuat {
    pub const IDENTITY: UnitQuat = UnitQuat {
        eta: 1.0,
        eps: Vector3::new(0.0, 0.0, 0.0),
    };

    /// Builds a quaternion from raw parts without normalizing.
    ///
    /// The caller is responsible for the unit-norm invariant.
    pub const fn from_parts_unchecked(eta: f64, eps: Vector3<f64>) -> Self {
        Self { eta, eps }
    }

    pub fn new_normalize(eta: f64, eps: Vector3<f64>) -> Self {
        let n = (eta * eta + eps.norm_squared()).sqrt();
        Self {
            eta: eta / n,
            eps: eps / n,
        }
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let a = axis.normalize();
        let (s, c) = (0.5 * angle).sin_cos();
        Self { eta: c, eps: a * s }
    }

    pub fn from_rotation_matrix(r: &Matrix3<f64>) -> Self {
        let q = nalgebra::UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r));
        Self {
            eta: q.w,
            eps: q.imag(),
        }
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let (w, v) = (self.eta, self.eps);
        let vx = skew(&v);
        Matrix3::identity() * (w * w - v.norm_squared()) + v * v.transpose() * 2.0 + vx * (2.0 * w)
    }

    /// Hamilton product `self ⊗ rhs`.
    pub fn mul(&self, rhs: &UnitQuat) -> UnitQuat {
        UnitQuat {
            eta: self.eta * rhs.eta - self.eps.dot(&rhs.eps),
            eps: rhs.eps * self.eta + self.eps * rhs.eta + self.eps.cross(&rhs.eps),
        }
    }

    /// Conjugate, which is the inverse for unit quaternions.
    pub fn inverse(&self) -> UnitQuat {
        UnitQuat {
            eta: self.eta,
            eps: -self.eps,
        }
    }

    pub fn negate(&self) -> UnitQuat {
        UnitQuat {
            eta: -self.eta,
            eps: -self.eps,
        }
    }

    /// Representative with `eta >= 0`.
    pub fn canonical(&self) -> UnitQuat {
        if self.eta < 0.0 {
            self.negate()
        } else {
            *self
        }
    }

    pub fn normalize(&self) -> UnitQuat {
        Self::new_normalize(self.eta, self.eps)
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        // v' = v + 2 eta (eps x v) + 2 eps x (eps x v)
        let t = self.eps.cross(v) * 2.0;
        v + t * self.eta + self.eps.cross(&t)
    }

    pub fn norm(&self) -> f64 {
        (self.eta * self.eta + self.eps.norm_squared()).sqrt()
    }

    pub fn dot(&self, other: &UnitQuat) -> f64 {
        self.eta * other.eta + self.eps.dot(&other.eps)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.eta, self.eps.x, self.eps.y, self.eps.z]
    }

    pub fn to_vector4(&self) -> Vector4<f64> {
        Vector4::new(self.eta, self.eps.x, self.eps.y, self.eps.z)
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        2.0 * self.eps.norm().atan2(self.eta.abs())
    }
}

/// Which angular velocity the quaternion rate is expressed against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    /// Angular velocity expressed in the reference frame.
    Spatial,
    /// Angular velocity expressed in the moving frame.
    Body,
}

/// Maps an angular velocity to the quaternion derivative, `q̇ = B(q) ω`.
///
/// Spatial: `½ [-εᵀ; ηI - ε̂]`. Body: `½ [-εᵀ; ηI + ε̂]`.
pub fn representation_jacobian(q: &UnitQuat, representation: Representation) -> Matrix4x3<f64> {
    let e = skew(&q.eps);
    let lower = match representation {
        Representation::Spatial => Matrix3::identity() * q.eta - e,
        Representation::Body => Matrix3::identity() * q.eta + e,
    };
    let mut b = Matrix4x3::zeros();
    b.fixed_view_mut::<1, 3>(0, 0).copy_from(&(-q.eps.transpose()));
    b.fixed_view_mut::<3, 3>(1, 0).copy_from(&lower);
    b * 0.5
}

/// Cross-product matrix: `skew(a) * b == a × b`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Largest absolute entry of `RᵀR - I`, plus how far `det R` is from 1.
pub fn orthonormality_defect(r: &Matrix3<f64>) -> f64 {
    let g = r.transpose() * r - Matrix3::identity();
    g.amax().max((r.determinant() - 1.0).abs())
}
