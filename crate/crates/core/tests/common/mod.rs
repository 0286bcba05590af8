#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waam_coord::{ChainDescription, JointConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A configuration scattered around the home pose, with the table free.
pub fn random_config(chain: &ChainDescription, rng: &mut ChaCha8Rng) -> JointConfig {
    let home = chain.home_config();
    let table = home
        .table
        .iter()
        .enumerate()
        .map(|(i, _)| if i == 0 { rng.random_range(-1.0..1.0) } else { rng.random_range(-3.0..3.0) })
        .collect();
    let arm = home.arm.iter().map(|a| a + rng.random_range(-0.6..0.6)).collect();
    JointConfig::new(table, arm)
}

pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    let a = (m - m.transpose()) * 0.5;
    Vector3::new(a[(2, 1)], a[(0, 2)], a[(1, 0)])
}

/// Five-point central difference of the pose twist in the deposition
/// frame, one column per joint.
pub fn fd_jacobian(chain: &ChainDescription, theta: &JointConfig, h: f64) -> DMatrix<f64> {
    let n_t = chain.table_dof();
    let base = theta.to_vector();
    let r0 = chain.forward_kinematics(theta).unwrap().rotation_matrix();
    let mut j = DMatrix::zeros(6, base.len());
    for c in 0..base.len() {
        let eval = |d: f64| {
            let mut v = base.clone();
            v[c] += d;
            chain.forward_kinematics(&JointConfig::from_vector(&v, n_t)).unwrap()
        };
        let (p2, p1, m1, m2) = (eval(2.0 * h), eval(h), eval(-h), eval(-2.0 * h));
        let dp = (-p2.p + p1.p * 8.0 - m1.p * 8.0 + m2.p) / (12.0 * h);
        let dr = (-p2.rotation_matrix() + p1.rotation_matrix() * 8.0 - m1.rotation_matrix() * 8.0 + m2.rotation_matrix()) / (12.0 * h);
        let w = vee(&(dr * r0.transpose()));
        j.view_mut((0, c), (3, 1)).copy_from(&dp);
        j.view_mut((3, c), (3, 1)).copy_from(&w);
    }
    j
}

/// `max_c ‖ΔJ_c‖ / ‖J_c‖`.
pub fn column_relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|c| {
            let d = (a.column(c) - b.column(c)).norm();
            d / b.column(c).norm().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}
