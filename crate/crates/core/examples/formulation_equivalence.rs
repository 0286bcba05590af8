//! Inverts the same task command through the augmented and the constrained
//! formulations at random states and reports how far apart they land.

use nalgebra::{Vector2, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waam_coord::augmentation::{build_lambda, SelectionMatrix};
use waam_coord::harness::formulation_deviation;
use waam_coord::singularity::DlsConfig;
use waam_coord::{default_chain, JointConfig};

fn main() -> waam_coord::Result<()> {
    let chain = default_chain();
    let dls = DlsConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_task, mut worst_joint, mut singular): (f64, f64, usize) = (0.0, 0.0, 0);
    let n = 500;
    for _ in 0..n {
        let table = vec![rng.random_range(-1.0..1.0), rng.random_range(-3.0..3.0)];
        let arm = chain.home_config().arm.iter().map(|a| a + rng.random_range(-0.6..0.6)).collect();
        let state = chain.evaluate(&JointConfig::new(table, arm))?;
        let lambda = build_lambda(&SelectionMatrix::alignment(), &state.pose.rotation_matrix())?;
        let u1 = Vector6::from_fn(|i, _| if i < 3 { rng.random_range(-5.0..5.0) } else { rng.random_range(-0.1..0.1) });
        let u2 = Vector2::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
        let d = formulation_deviation(&state.jacobian, &lambda, &u1, &u2, &dls)?;
        if d.singular {
            singular += 1;
            continue;
        }
        worst_task = worst_task.max(d.task_velocity);
        worst_joint = worst_joint.max(d.joint_command);
    }
    println!("{} states compared, {singular} singular skipped", n - singular);
    println!("max task velocity difference {worst_task:.3e}");
    println!("max joint command difference {worst_joint:.3e}");
    Ok(())
}
