//! Builds the alignment task map and the augmented Jacobian, and shows the
//! rank drop when the turntable axis lines up with the torch.

use waam_coord::augmentation::{augmented_jacobian, build_lambda, SelectionMatrix};
use waam_coord::controller::ControlGains;
use waam_coord::sim::{SimConfig, Simulator};
use waam_coord::singularity::DlsConfig;
use waam_coord::trajectory::{DepositionPlan, Scenario};
use waam_coord::{default_chain, JointConfig};

fn report(chain: &waam_coord::ChainDescription, name: &str, theta: &JointConfig) -> waam_coord::Result<()> {
    let state = chain.evaluate(theta)?;
    let h = SelectionMatrix::alignment();
    let lambda = build_lambda(&h, &state.pose.rotation_matrix())?;
    let j_a = augmented_jacobian(&state.jacobian, &lambda)?;
    println!("{name}: rank {} of {}, sigma_min {:.3e}", j_a.rank(), j_a.entries.nrows(), j_a.sigma_min());
    Ok(())
}

fn main() -> waam_coord::Result<()> {
    let chain = default_chain();
    let h = SelectionMatrix::alignment();
    println!("selection matrix H:\n{}", h.h);

    let sim = Simulator::new(&chain, ControlGains::default(), DlsConfig::default(), SimConfig::default())?;
    for scenario in [Scenario::InclinedWall, Scenario::CurvedWall] {
        let plan = DepositionPlan::preset(scenario);
        let theta = sim.solve_initial_config(&plan.reference(1, 0.0)?, &chain.home_config())?;
        report(&chain, &format!("{scenario} start"), &theta)?;
    }
    Ok(())
}
