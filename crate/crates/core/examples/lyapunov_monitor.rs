//! Step response under a decaying joint-velocity disturbance: error norms,
//! the injected energy and the Lyapunov function over time.

use nalgebra::{DVector, Vector3};
use waam_coord::controller::{ControlGains, TaskReference};
use waam_coord::sim::{EtaModel, Integrator, SimConfig, Simulator};
use waam_coord::singularity::DlsConfig;
use waam_coord::trajectory::{DepositionPlan, Phase, Scenario, TickReference};
use waam_coord::{default_chain, JointConfig};

fn main() -> waam_coord::Result<()> {
    let chain = default_chain();
    let sim = SimConfig { eta: EtaModel::DEFAULT_SINUSOID, integrator: Integrator::Rk4, seed: 5, ..SimConfig::default() };
    let simulator = Simulator::new(&chain, ControlGains::default(), DlsConfig::default(), sim)?;

    let plan = DepositionPlan::preset(Scenario::InclinedWall);
    let theta0 = simulator.solve_initial_config(&plan.reference(1, 0.0)?, &chain.home_config())?;
    let shifted = theta0.to_vector() + DVector::from_element(chain.dof(), 0.03);
    let target = chain.evaluate(&JointConfig::from_vector(&shifted, chain.table_dof()))?;
    let mut reference = TaskReference::hold(&target.pose);
    reference.z_d = target.arm_pose.q.rotate(&Vector3::z());

    let ticks = (20.0 / sim.dt) as usize;
    let trace = simulator.simulate(
        &theta0,
        ticks,
        |tick| {
            let t = tick as f64 * sim.dt;
            Ok(TickReference { t, phase: Phase::Deposit, layer: 1, local_t: t, reference })
        },
        None,
    )?;
    if let EtaModel::DecayingSinusoid { amplitude, decay, frequency } = sim.eta {
        println!("eta = {amplitude} e^(-{decay} t) sin({frequency} t + phi)");
    }
    println!("{:>6} {:>11} {:>11} {:>11} {:>11} {:>11}", "t", "|e_p|", "|e_eps|", "|e_s|", "V", "energy");
    for r in trace.records.iter().step_by(60) {
        println!(
            "{:6.1} {:11.3e} {:11.3e} {:11.3e} {:11.3e} {:11.3e}",
            r.t,
            r.e_p.norm(),
            r.e_q.eps.norm(),
            r.e_s.norm(),
            r.v,
            r.eta_energy
        );
    }
    Ok(())
}
