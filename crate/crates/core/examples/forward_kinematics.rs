//! Torch pose and system Jacobian of the default cell at a few joint
//! configurations.

use waam_coord::{default_chain, JointConfig};

fn main() -> waam_coord::Result<()> {
    let chain = default_chain();
    println!("{} table joints, {} arm joints, reach {:.0} mm", chain.table_dof(), chain.arm_dof(), chain.reach());

    let configs = [
        ("home", chain.home_config()),
        ("tilted table", JointConfig::new(vec![0.5, 1.0], chain.home_config().arm)),
        ("arm moved", JointConfig::new(vec![0.0, 0.0], vec![0.3, -0.2, 0.4, 0.1, -0.5, 0.2])),
    ];
    for (name, theta) in configs {
        let state = chain.evaluate(&theta)?;
        let p = state.pose.p;
        let q = state.pose.q;
        println!("\n{name}: theta = {:?}", theta.to_vector().as_slice());
        println!("  torch in F_d: p = [{:.3}, {:.3}, {:.3}] mm", p.x, p.y, p.z);
        println!("  q = [{:.5}, {:.5}, {:.5}, {:.5}]", q.eta, q.eps.x, q.eps.y, q.eps.z);
        println!("  torch axis in the arm base: {:.4?}", state.arm_pose.q.rotate(&nalgebra::Vector3::z()).as_slice());
        println!("  Jacobian (rows v_x..w_z, columns table | arm):");
        for i in 0..6 {
            let row: Vec<String> = (0..state.jacobian.ncols()).map(|c| format!("{:9.3}", state.jacobian.entries[(i, c)])).collect();
            println!("   {}", row.join(" "));
        }
    }
    Ok(())
}
