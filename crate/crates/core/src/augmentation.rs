//! Task augmentation: selection matrix, the `Λ` map, the augmented Jacobian
//! and the equivalent constrained-Jacobian formulation.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::chain::{check_rotation, extended_rotation, JacobianFrame, JacobianMatrix};
use crate::error::{check_dim, Error, Result};
use crate::singularity::{DlsConfig, SvdDecomposition};

/// One coordinate of a `[v; ω]` twist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwistAxis {
    Vx,
    Vy,
    Vz,
    Wx,
    Wy,
    Wz,
}

impl TwistAxis {
    pub const ALL: [TwistAxis; 6] = [
        TwistAxis::Vx,
        TwistAxis::Vy,
        TwistAxis::Vz,
        TwistAxis::Wx,
        TwistAxis::Wy,
        TwistAxis::Wz,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["vx", "vy", "vz", "wx", "wy", "wz"][self.index()]
    }
}

impl fmt::Display for TwistAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TwistAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vx" => Ok(TwistAxis::Vx),
            "vy" => Ok(TwistAxis::Vy),
            "vz" => Ok(TwistAxis::Vz),
            "wx" | "ωx" => Ok(TwistAxis::Wx),
            "wy" | "ωy" => Ok(TwistAxis::Wy),
            "wz" | "ωz" => Ok(TwistAxis::Wz),
            other => Err(Error::Selection(format!("unknown twist axis `{other}`"))),
        }
    }
}

/// `r × 6` matrix whose rows pick twist coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionMatrix {
    pub axes: Vec<TwistAxis>,
    pub h: DMatrix<f64>,
}

impl SelectionMatrix {
    pub fn r(&self) -> usize {
        self.axes.len()
    }

    /// Rotations about the torch x and y axes.
    pub fn alignment() -> Self {
        build_selection_matrix(&[TwistAxis::Wx, TwistAxis::Wy]).expect("two distinct axes")
    }
}

pub fn build_selection_matrix(axes: &[TwistAxis]) -> Result<SelectionMatrix> {
    if axes.is_empty() {
        return Err(Error::Selection("no axes selected".into()));
    }
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].contains(a) {
            return Err(Error::Selection(format!("axis {a} selected twice")));
        }
    }
    let mut h = DMatrix::zeros(axes.len(), 6);
    for (row, a) in axes.iter().enumerate() {
        h[(row, a.index())] = 1.0;
    }
    Ok(SelectionMatrix { axes: axes.to_vec(), h })
}

/// `Λ = H Ωᵀ` and an orthonormal basis `Λ_null` of its null space.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaMap {
    /// r × 6
    pub lambda: DMatrix<f64>,
    /// 6 × (6 − r), orthonormal columns.
    pub null: DMatrix<f64>,
}

impl LambdaMap {
    pub fn r(&self) -> usize {
        self.lambda.nrows()
    }

    /// `[Λ_null Λᵀ]`, a 6×6 orthogonal matrix.
    pub fn completed_basis(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(6, 6);
        let k = self.null.ncols();
        b.columns_mut(0, k).copy_from(&self.null);
        b.columns_mut(k, self.r()).copy_from(&self.lambda.transpose());
        b
    }
}

/// `R` is the rotation of `F_t` relative to `F_d`.
pub fn build_lambda(h: &SelectionMatrix, r: &Matrix3<f64>) -> Result<LambdaMap> {
    check_rotation(r)?;
    let omega = extended_rotation(r);
    let lambda = &h.h * DMatrix::from_column_slice(6, 6, omega.transpose().as_slice());
    let null = complete_orthonormal_basis(&lambda);
    Ok(LambdaMap { lambda, null })
}

/// Orthonormal completion of the (orthonormal) rows of `rows` to a basis of
/// R⁶. Each new vector is the standard basis vector with the largest
/// residual after projecting out everything chosen so far; ties go to the
/// lowest index.
fn complete_orthonormal_basis(rows: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rows.ncols();
    let mut basis: Vec<DVector<f64>> = rows.row_iter().map(|r| r.transpose()).collect();
    let mut added = Vec::with_capacity(n - basis.len());
    while basis.len() < n {
        let mut best: Option<(f64, DVector<f64>)> = None;
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            // Two Gram–Schmidt passes keep the result orthogonal to rounding.
            for _ in 0..2 {
                for b in &basis {
                    let d = b.dot(&e);
                    e.axpy(-d, b, 1.0);
                }
            }
            let norm = e.norm();
            if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
                best = Some((norm, e));
            }
        }
        let (norm, e) = best.expect("n > 0");
        let v = e / norm;
        basis.push(v.clone());
        added.push(v);
    }
    let mut out = DMatrix::zeros(n, added.len());
    for (j, v) in added.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// `J_A = [[J1, J2], [0, Λ J2]]` with its SVD.
#[derive(Clone, Debug)]
pub struct AugmentedJacobian {
    pub entries: DMatrix<f64>,
    pub table_dof: usize,
    pub svd: SvdDecomposition,
}

impl AugmentedJacobian {
    pub fn r(&self) -> usize {
        self.entries.nrows() - 6
    }

    pub fn sigma_min(&self) -> f64 {
        self.svd.sigma_min()
    }

    pub fn rank(&self) -> usize {
        self.svd.rank()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0.0)
    }

    /// Inverse under `cfg` applied to the stacked task velocity.
    pub fn solve(&self, cfg: &DlsConfig, task: &DVector<f64>) -> Result<DVector<f64>> {
        self.svd.solve(cfg, task)
    }

    pub fn apply(&self, theta_dot: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("joint velocity", self.entries.ncols(), theta_dot.len())?;
        Ok(&self.entries * theta_dot)
    }
}

fn require_deposition(j: &JacobianMatrix) -> Result<()> {
    if j.frame != JacobianFrame::Deposition {
        return Err(Error::WrongRepresentation {
            expected: "deposition-frame",
            found: "body",
        });
    }
    if !j.is_finite() {
        return Err(Error::NonFinite("jacobian"));
    }
    Ok(())
}

fn dyn6(m: &crate::chain::Matrix6xX) -> DMatrix<f64> {
    DMatrix::from_column_slice(6, m.ncols(), m.as_slice())
}

pub fn augmented_jacobian(j: &JacobianMatrix, lambda: &LambdaMap) -> Result<AugmentedJacobian> {
    require_deposition(j)?;
    let m = j.ncols();
    let r = lambda.r();
    let n_t = j.table_dof;
    let j2 = dyn6(&j.arm_block());
    let mut a = DMatrix::zeros(6 + r, m);
    a.rows_mut(0, 6).copy_from(&dyn6(&j.entries));
    a.view_mut((6, n_t), (r, m - n_t)).copy_from(&(&lambda.lambda * j2));
    let svd = SvdDecomposition::new(&a)?;
    Ok(AugmentedJacobian { entries: a, table_dof: n_t, svd })
}

/// The constrained formulation: `J_c = [J1, Λ_null]` together with what is
/// needed to recover arm joint velocities.
#[derive(Clone, Debug)]
pub struct ConstrainedTaskMap {
    /// 6 × (m − n + 6 − r)
    pub j_c: DMatrix<f64>,
    pub j1: DMatrix<f64>,
    pub j2: DMatrix<f64>,
    pub j2_pinv: DMatrix<f64>,
    pub lambda: LambdaMap,
    /// Smallest singular value of `J2`.
    pub j2_sigma_min: f64,
    /// `J2` lost rank (arm singularity); reconstruction is least-squares only.
    pub j2_rank_deficient: bool,
}

impl ConstrainedTaskMap {
    /// `θ̇_a = J2† (Λ_null v̄ + Λᵀ ω_s)`.
    pub fn reconstruct_arm(&self, v_bar: &DVector<f64>, omega_s: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("v_bar", self.lambda.null.ncols(), v_bar.len())?;
        check_dim("omega_s", self.lambda.r(), omega_s.len())?;
        let arm_twist = &self.lambda.null * v_bar + self.lambda.lambda.transpose() * omega_s;
        Ok(&self.j2_pinv * arm_twist)
    }

    /// `[v̄; ω_s] = [Λ_nullᵀ; Λ] J2 θ̇_a`.
    pub fn decompose_arm(&self, theta_a_dot: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        check_dim("arm joint velocity", self.j2.ncols(), theta_a_dot.len())?;
        let arm_twist = &self.j2 * theta_a_dot;
        Ok((self.lambda.null.transpose() * &arm_twist, &self.lambda.lambda * arm_twist))
    }

    /// Stacked `[v; ω_s]` from the constrained form,
    /// `v = J_c [θ̇_t; v̄] + Λᵀ ω_s`.
    pub fn task_velocities(&self, theta_dot: &DVector<f64>) -> Result<DVector<f64>> {
        let n_t = self.j1.ncols();
        check_dim("joint velocity", n_t + self.j2.ncols(), theta_dot.len())?;
        let theta_t = theta_dot.rows(0, n_t).into_owned();
        let theta_a = theta_dot.rows(n_t, self.j2.ncols()).into_owned();
        let (v_bar, omega_s) = self.decompose_arm(&theta_a)?;
        let mut x = DVector::zeros(self.j_c.ncols());
        x.rows_mut(0, n_t).copy_from(&theta_t);
        x.rows_mut(n_t, v_bar.len()).copy_from(&v_bar);
        let v = &self.j_c * x + self.lambda.lambda.transpose() * &omega_s;
        let mut out = DVector::zeros(6 + omega_s.len());
        out.rows_mut(0, 6).copy_from(&v);
        out.rows_mut(6, omega_s.len()).copy_from(&omega_s);
        Ok(out)
    }

    /// Joint command realizing `[u1; u2]` through the constrained form:
    /// `ω_s = u2`, `[θ̇_t; v̄] = J_c⁺ (u1 − Λᵀ u2)`, then arm reconstruction.
    pub fn joint_command(&self, cfg: &DlsConfig, u1: &DVector<f64>, u2: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("u1", 6, u1.len())?;
        check_dim("u2", self.lambda.r(), u2.len())?;
        let n_t = self.j1.ncols();
        let rhs = u1 - self.lambda.lambda.transpose() * u2;
        let x = SvdDecomposition::new(&self.j_c)?.solve(cfg, &rhs)?;
        let v_bar = x.rows(n_t, x.len() - n_t).into_owned();
        let theta_a = self.reconstruct_arm(&v_bar, u2)?;
        let mut out = DVector::zeros(n_t + theta_a.len());
        out.rows_mut(0, n_t).copy_from(&x.rows(0, n_t));
        out.rows_mut(n_t, theta_a.len()).copy_from(&theta_a);
        Ok(out)
    }

    pub fn sigma_min(&self) -> Result<f64> {
        Ok(SvdDecomposition::new(&self.j_c)?.sigma_min())
    }
}

pub fn constrained_task_map(j: &JacobianMatrix, lambda: &LambdaMap) -> Result<ConstrainedTaskMap> {
    require_deposition(j)?;
    let j1 = dyn6(&j.table_block());
    let j2 = dyn6(&j.arm_block());
    let k = lambda.null.ncols();
    let mut j_c = DMatrix::zeros(6, j1.ncols() + k);
    j_c.columns_mut(0, j1.ncols()).copy_from(&j1);
    j_c.columns_mut(j1.ncols(), k).copy_from(&lambda.null);
    let svd2 = SvdDecomposition::new(&j2)?;
    let j2_sigma_min = svd2.sigma_min();
    let j2_rank_deficient = svd2.rank() < j2.nrows().min(j2.ncols()) || j2_sigma_min < 1e-9 * svd2.sigma_max().max(1.0);
    Ok(ConstrainedTaskMap {
        j_c,
        j1,
        j2_pinv: svd2.pseudo_inverse(),
        j2,
        lambda: lambda.clone(),
        j2_sigma_min,
        j2_rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::UnitQuat;
    use nalgebra::Vector3;

    #[test]
    fn alignment_selection_matrix() {
        let h = SelectionMatrix::alignment();
        let expected = DMatrix::from_row_slice(2, 6, &[0., 0., 0., 1., 0., 0., 0., 0., 0., 0., 1., 0.]);
        assert_eq!(h.h, expected);
    }

    #[test]
    fn full_and_single_selection() {
        let all = build_selection_matrix(&TwistAxis::ALL).unwrap();
        assert_eq!(all.h, DMatrix::identity(6, 6));
        let z = build_selection_matrix(&[TwistAxis::Wz]).unwrap();
        assert_eq!(z.h.as_slice(), &[0., 0., 0., 0., 0., 1.]);
        assert!(build_selection_matrix(&[]).is_err());
        assert!(build_selection_matrix(&[TwistAxis::Wx, TwistAxis::Wx]).is_err());
        assert_eq!("ωy".parse::<TwistAxis>().unwrap(), TwistAxis::Wy);
    }

    #[test]
    fn lambda_at_identity() {
        let l = build_lambda(&SelectionMatrix::alignment(), &Matrix3::identity()).unwrap();
        assert_eq!(l.lambda, SelectionMatrix::alignment().h);
        let mut expected = DMatrix::zeros(6, 4);
        for (c, i) in [0usize, 1, 2, 5].into_iter().enumerate() {
            expected[(i, c)] = 1.0;
        }
        assert_eq!(l.null, expected);
    }

    #[test]
    fn lambda_basis_is_orthogonal() {
        let r = UnitQuat::from_axis_angle(&Vector3::new(0.3, -0.2, 0.9), 1.1).to_rotation_matrix();
        let l = build_lambda(&SelectionMatrix::alignment(), &r).unwrap();
        let b = l.completed_basis();
        assert!((b.transpose() * &b - DMatrix::identity(6, 6)).amax() < 1e-12);
        assert!((&l.lambda * &l.null).amax() < 1e-12);
        assert!(build_lambda(&SelectionMatrix::alignment(), &(r * 2.0)).is_err());
    }

    #[test]
    fn full_selection_has_empty_null_space() {
        let all = build_selection_matrix(&TwistAxis::ALL).unwrap();
        let l = build_lambda(&all, &Matrix3::identity()).unwrap();
        assert_eq!(l.null.shape(), (6, 0));
    }
}
