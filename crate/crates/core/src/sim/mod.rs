//! Closed-loop simulation of the controlled chain at the control rate.

mod disturbance;
mod trace;

use nalgebra::{DVector, Vector2, Vector6};
use serde::{Deserialize, Serialize};

use crate::augmentation::{
    augmented_jacobian, build_lambda, constrained_task_map, AugmentedJacobian, LambdaMap, SelectionMatrix,
};
use crate::chain::{ChainDescription, JointConfig, KinematicState};
use crate::controller::{
    joint_velocity_command, primary_control, secondary_control, stack_task, ControlGains, ErrorState, TaskReference,
};
use crate::error::{Error, Result};
use crate::singularity::DlsConfig;
use crate::trajectory::{DepositionPlan, Phase, Schedule, TickReference};

pub use disturbance::{step, Disturbance, EtaModel, Integrator};
pub use trace::{rms_errors, LayerSummary, RmsBand, RmsSummary, SimTrace, TraceRecord, RMS_CHANNELS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Control period (s).
    pub dt: f64,
    pub eta: EtaModel,
    pub integrator: Integrator,
    pub seed: u64,
    /// Joint acceleration cap applied to the command (rad/s²); 0 disables.
    pub slew_limit: f64,
    /// Abort once an error norm exceeds this multiple of its reference
    /// level, `max(initial norm, floor)`.
    pub divergence_factor: f64,
    /// Floors for the position (mm), orientation and alignment channels.
    #[serde(deserialize_with = "crate::fixed::exact")]
    pub divergence_floor: [f64; 3],
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 60.0,
            eta: EtaModel::None,
            integrator: Integrator::Euler,
            seed: 0,
            slew_limit: 2.0,
            divergence_factor: 10.0,
            divergence_floor: [5.0, 0.1, 0.1],
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("sim.dt must be > 0, got {}", self.dt)));
        }
        if !(self.slew_limit >= 0.0) {
            return Err(Error::Config(format!("sim.slew_limit must be >= 0, got {}", self.slew_limit)));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::Config("sim.divergence_factor must be > 1".into()));
        }
        if !self.divergence_floor.iter().all(|f| *f > 0.0) {
            return Err(Error::Config("sim.divergence_floor entries must be > 0".into()));
        }
        self.eta.validate()
    }
}

/// `V = ½‖e_p‖² + (e_η − 1)² + ‖e_ε‖² + (e_ηs − 1)² + ‖e_s‖²`.
pub fn lyapunov_value(err: &ErrorState) -> f64 {
    0.5 * err.e_p.norm_squared()
        + (err.e_q.eta - 1.0).powi(2)
        + err.e_q.eps.norm_squared()
        + (err.e_qs.eta - 1.0).powi(2)
        + err.e_s.norm_squared()
}

/// Which differential map turns the task signals into joint commands.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    #[default]
    Augmented,
    Constrained,
}

impl Formulation {
    pub fn name(self) -> &'static str {
        match self {
            Formulation::Augmented => "augmented",
            Formulation::Constrained => "constrained",
        }
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "augmented" => Ok(Formulation::Augmented),
            "constrained" => Ok(Formulation::Constrained),
            _ => Err(Error::Config(format!("unknown formulation '{s}' (expected augmented or constrained)"))),
        }
    }
}

/// Everything computed at one tick, handed to an observer.
pub struct TickContext<'a> {
    pub tick: usize,
    pub reference: &'a TickReference,
    pub theta: &'a JointConfig,
    pub state: &'a KinematicState,
    pub errors: &'a ErrorState,
    pub lambda: &'a LambdaMap,
    pub j_a: &'a AugmentedJacobian,
    pub u1: &'a Vector6<f64>,
    pub u2: &'a Vector2<f64>,
    /// Command before slew limiting.
    pub u_raw: &'a DVector<f64>,
}

/// One controller + plant pairing.
#[derive(Clone, Debug)]
pub struct Simulator<'a> {
    pub chain: &'a ChainDescription,
    pub gains: ControlGains,
    pub dls: DlsConfig,
    pub sim: SimConfig,
    pub selection: SelectionMatrix,
    pub formulation: Formulation,
}

struct Evaluated {
    state: KinematicState,
    errors: ErrorState,
    lambda: LambdaMap,
    j_a: AugmentedJacobian,
}

impl<'a> Simulator<'a> {
    pub fn new(chain: &'a ChainDescription, gains: ControlGains, dls: DlsConfig, sim: SimConfig) -> Result<Self> {
        chain.validate()?;
        gains.validate()?;
        dls.validate()?;
        sim.validate()?;
        Ok(Self {
            chain,
            gains,
            dls,
            sim,
            selection: SelectionMatrix::alignment(),
            formulation: Formulation::Augmented,
        })
    }

    fn evaluate(&self, theta: &JointConfig, reference: &TaskReference) -> Result<Evaluated> {
        let state = self.chain.evaluate(theta)?;
        let errors = ErrorState::compute(reference, &state);
        let lambda = build_lambda(&self.selection, &state.pose.rotation_matrix())?;
        let j_a = augmented_jacobian(&state.jacobian, &lambda)?;
        Ok(Evaluated { state, errors, lambda, j_a })
    }

    /// Solves for a configuration at `reference` by iterating the filtered
    /// inverse from `seed`.
    pub fn solve_initial_config(&self, reference: &TaskReference, seed: &JointConfig) -> Result<JointConfig> {
        let n_t = self.chain.table_dof();
        let mut theta = seed.clone();
        let mut best: Option<(f64, JointConfig)> = None;
        for _ in 0..500 {
            let ev = self.evaluate(&theta, reference)?;
            let e = &ev.errors;
            let size = e.e_p.norm() + e.e_q.eps.norm() + e.e_s.norm();
            if best.as_ref().is_none_or(|(b, _)| size < *b) {
                best = Some((size, theta.clone()));
            }
            if e.e_p.norm() < 1e-9 && e.e_q.eps.norm() < 1e-12 && e.e_s.norm() < 1e-12 {
                return Ok(theta);
            }
            let eps = e.e_q.eps * 2.0;
            let s = e.e_s * 2.0;
            let task = stack_task(&Vector6::new(e.e_p.x, e.e_p.y, e.e_p.z, eps.x, eps.y, eps.z), s.as_slice());
            let mut d = ev.j_a.solve(&self.dls, &task)?;
            let n = d.norm();
            if n > 0.2 {
                d *= 0.2 / n;
            }
            theta = JointConfig::from_vector(&(theta.to_vector() + d), n_t);
        }
        let (size, theta) = best.expect("at least one iteration");
        let ev = self.evaluate(&theta, reference)?;
        if ev.errors.e_p.norm() > 1e-3 || ev.errors.alpha > 1e-4 || ev.errors.e_q.eps.norm() > 1e-4 {
            return Err(Error::Config(format!(
                "initial reference pose is unreachable from the home configuration (residual {size:.3e})"
            )));
        }
        Ok(theta)
    }

    /// Runs `ticks` control periods from `theta0`, asking `reference` for
    /// the reference in force at each tick.
    pub fn simulate<R>(
        &self,
        theta0: &JointConfig,
        ticks: usize,
        mut reference: R,
        mut observer: Option<&mut dyn FnMut(&TickContext)>,
    ) -> Result<SimTrace>
    where
        R: FnMut(usize) -> Result<TickReference>,
    {
        self.chain.check_config(theta0)?;
        let n_t = self.chain.table_dof();
        let m = self.chain.dof();
        let dt = self.sim.dt;
        let mut disturbance = Disturbance::new(self.sim.eta, m, self.sim.seed);
        let mut theta = theta0.to_vector();
        let mut prev_u = DVector::<f64>::zeros(m);
        let mut records = Vec::with_capacity(ticks + 1);
        let mut limits: Option<[f64; 3]> = None;
        let (mut eta_energy, mut eta_drift) = (0.0, 0.0);

        for tick in 0..=ticks {
            let tr = reference(tick)?;
            let config = JointConfig::from_vector(&theta, n_t);
            let ev = self.evaluate(&config, &tr.reference)?;
            let err = &ev.errors;

            let norms = [err.e_p.norm(), err.e_q.eps.norm(), err.e_s.norm()];
            let lim = *limits.get_or_insert_with(|| {
                let f = self.sim.divergence_floor;
                [0, 1, 2].map(|i| self.sim.divergence_factor * norms[i].max(f[i]))
            });
            for (i, name) in ["position", "orientation", "alignment"].into_iter().enumerate() {
                if !(norms[i] <= lim[i]) {
                    return Err(Error::Divergence { t: tr.t, channel: name, value: norms[i], limit: lim[i] });
                }
            }

            let u1 = primary_control(&tr.reference, &err.e_p, &err.e_q, &self.gains);
            let u2 = secondary_control(&tr.reference.omega_sd, &err.e_s, &self.gains);
            let u_raw = match self.formulation {
                Formulation::Augmented => joint_velocity_command(&ev.j_a, &u1, u2.as_slice(), &self.dls)?,
                Formulation::Constrained => {
                    let map = constrained_task_map(&ev.state.jacobian, &ev.lambda)?;
                    let u1 = DVector::from_column_slice(u1.as_slice());
                    let u2 = DVector::from_column_slice(u2.as_slice());
                    map.joint_command(&self.dls, &u1, &u2)?
                }
            };
            if !u_raw.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("joint velocity command"));
            }
            let residual = &ev.j_a.entries * &u_raw - stack_task(&u1, u2.as_slice());
            let mut u = u_raw.clone();
            let mut slew_limited = false;
            if self.sim.slew_limit > 0.0 {
                let max_du = self.sim.slew_limit * dt;
                for i in 0..m {
                    let lo = prev_u[i] - max_du;
                    let hi = prev_u[i] + max_du;
                    if u[i] < lo || u[i] > hi {
                        u[i] = u[i].clamp(lo, hi);
                        slew_limited = true;
                    }
                }
            }

            if let Some(obs) = observer.as_deref_mut() {
                obs(&TickContext {
                    tick,
                    reference: &tr,
                    theta: &config,
                    state: &ev.state,
                    errors: err,
                    lambda: &ev.lambda,
                    j_a: &ev.j_a,
                    u1: &u1,
                    u2: &u2,
                    u_raw: &u_raw,
                });
            }

            let eta_now = disturbance.eta(tr.t, &u);
            let ja_eta = &ev.j_a.entries * &eta_now;
            let eta_power = ja_eta.norm_squared();
            records.push(TraceRecord {
                t: tr.t,
                layer: tr.layer,
                phase: tr.phase,
                local_t: tr.local_t,
                theta: theta.iter().copied().collect(),
                p: ev.state.pose.p,
                q: ev.state.pose.q,
                e_p: err.e_p,
                e_q: err.e_q,
                e_s: err.e_s,
                alpha: err.alpha,
                u: u.iter().copied().collect(),
                sigma_min: ev.j_a.sigma_min(),
                v: lyapunov_value(err),
                eta_power,
                eta_energy,
                eta_drift,
                main_residual: residual.rows(0, 6).norm(),
                secondary_residual: residual.rows(6, residual.len() - 6).norm(),
                alignment_degenerate: err.degenerate,
                slew_limited,
            });
            if tick == ticks {
                break;
            }
            eta_energy += eta_power * dt;
            eta_drift += eta_power.sqrt() * dt;
            theta = disturbance.advance(&theta, &u, tr.t, dt, self.sim.integrator);
            prev_u = u;
        }
        Ok(SimTrace { dt, table_dof: n_t, records })
    }

    /// Runs a deposition plan from the chain's home configuration.
    pub fn run_plan(&self, plan: &DepositionPlan, observer: Option<&mut dyn FnMut(&TickContext)>) -> Result<SimTrace> {
        let schedule = Schedule::new(plan, self.sim.dt)?;
        let home = self.chain.home_config();
        let Some(first) = schedule.at_tick(plan, 0)? else {
            // Nothing to deposit: a single record holding the home pose.
            let pose = self.chain.forward_kinematics(&home)?;
            let hold = TickReference {
                t: 0.0,
                phase: Phase::Dwell,
                layer: 0,
                local_t: 0.0,
                reference: TaskReference::hold(&pose),
            };
            let arm = self.chain.arm_forward_kinematics(&home.arm)?;
            let mut reference = hold;
            reference.reference.z_d = arm.q.rotate(&nalgebra::Vector3::z());
            return self.simulate(&home, 0, |_| Ok(reference), observer);
        };
        let theta0 = self.solve_initial_config(&first.reference, &home)?;
        self.simulate(
            &theta0,
            schedule.total_ticks,
            |tick| {
                schedule
                    .at_tick(plan, tick)?
                    .ok_or(Error::Config(format!("tick {tick} outside the schedule")))
            },
            observer,
        )
    }
}

/// Simulates `plan` on `chain`.
pub fn run_deposition(
    chain: &ChainDescription,
    plan: &DepositionPlan,
    gains: &ControlGains,
    dls: &DlsConfig,
    sim: &SimConfig,
) -> Result<SimTrace> {
    Simulator::new(chain, *gains, *dls, *sim)?.run_plan(plan, None)
}
