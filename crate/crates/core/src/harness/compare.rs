use nalgebra::{DVector, Vector2, Vector6};
use serde::Serialize;

use crate::augmentation::{augmented_jacobian, constrained_task_map, LambdaMap};
use crate::chain::JacobianMatrix;
use crate::controller::stack_task;
use crate::error::Result;
use crate::sim::{Simulator, TickContext};
use crate::singularity::{DlsConfig, DlsMode};

use super::{HarnessConfig, HarnessError};

/// Disagreement between the two formulations at one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FormulationDeviation {
    /// `max |[v; ω_s]_aug − [v; ω_s]_con|`
    pub task_velocity: f64,
    /// `max |θ̇_aug − θ̇_con|`
    pub joint_command: f64,
    /// Either map is rank deficient or inside the damping band; the exact
    /// comparison is not meaningful.
    pub singular: bool,
}

/// Inverts `[u1; u2]` exactly through both formulations and compares the
/// joint commands and the task velocities they produce.
pub fn formulation_deviation(
    j: &JacobianMatrix,
    lambda: &LambdaMap,
    u1: &Vector6<f64>,
    u2: &Vector2<f64>,
    dls: &DlsConfig,
) -> Result<FormulationDeviation> {
    let exact = DlsConfig { mode: DlsMode::Exact, ..*dls };
    let j_a = augmented_jacobian(j, lambda)?;
    let map = constrained_task_map(j, lambda)?;
    let task = stack_task(u1, u2.as_slice());
    let u_aug = j_a.solve(&exact, &task)?;
    let u_con = map.joint_command(
        &exact,
        &DVector::from_column_slice(u1.as_slice()),
        &DVector::from_column_slice(u2.as_slice()),
    )?;
    let v_aug = j_a.apply(&u_aug)?;
    let v_con = map.task_velocities(&u_con)?;
    let full_rank = j_a.rank() == j_a.entries.nrows().min(j_a.entries.ncols());
    let singular = !full_rank || j_a.sigma_min() < dls.sigma_threshold || map.j2_rank_deficient;
    Ok(FormulationDeviation {
        task_velocity: (v_aug - v_con).amax(),
        joint_command: (u_aug - u_con).amax(),
        singular,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub ticks: usize,
    pub compared: usize,
    /// Ticks left out of the exact comparison.
    pub singular_ticks: usize,
    pub max_task_velocity_deviation: f64,
    pub max_joint_command_deviation: f64,
    /// Time of the largest joint command deviation.
    pub worst_t: f64,
}

/// Drives the augmented closed loop and, at every tick, feeds the same
/// task signals through both formulations.
pub fn compare_formulations(config: &HarnessConfig) -> std::result::Result<ComparisonReport, HarnessError> {
    let (chain, plan) = config.validate()?;
    let sim = Simulator::new(&chain, config.gains, config.dls, config.sim)?;
    let mut report = ComparisonReport {
        scenario: plan.scenario.name().to_string(),
        ticks: 0,
        compared: 0,
        singular_ticks: 0,
        max_task_velocity_deviation: 0.0,
        max_joint_command_deviation: 0.0,
        worst_t: 0.0,
    };
    let mut failure = None;
    let mut observe = |ctx: &TickContext| {
        report.ticks += 1;
        match formulation_deviation(&ctx.state.jacobian, ctx.lambda, ctx.u1, ctx.u2, &config.dls) {
            Ok(d) if d.singular => report.singular_ticks += 1,
            Ok(d) => {
                report.compared += 1;
                report.max_task_velocity_deviation = report.max_task_velocity_deviation.max(d.task_velocity);
                if d.joint_command > report.max_joint_command_deviation {
                    report.max_joint_command_deviation = d.joint_command;
                    report.worst_t = ctx.reference.t;
                }
            }
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    };
    sim.run_plan(&plan, Some(&mut observe))?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(report)
}
