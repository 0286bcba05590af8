//! Unmodeled joint dynamics `η`, added to the commanded joint velocity.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EtaModel {
    None,
    /// `η_i(t) = a e^{−λt} sin(ω_η t + φ_i)` with seeded phases `φ_i`.
    DecayingSinusoid { amplitude: f64, decay: f64, frequency: f64 },
    /// The joints follow the command through `τ v̇ = u − v`; `η = v − u`.
    FirstOrderLag { tau: f64 },
}

impl Default for EtaModel {
    fn default() -> Self {
        EtaModel::None
    }
}

impl EtaModel {
    pub const DEFAULT_SINUSOID: EtaModel = EtaModel::DecayingSinusoid {
        amplitude: 0.05,
        decay: 0.5,
        frequency: 3.0,
    };
    pub const DEFAULT_LAG: EtaModel = EtaModel::FirstOrderLag { tau: 0.05 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            EtaModel::None => Ok(()),
            EtaModel::DecayingSinusoid { amplitude, decay, frequency } => {
                if !(decay > 0.0 && decay.is_finite()) || !amplitude.is_finite() || !frequency.is_finite() {
                    return Err(Error::Config(format!(
                        "decaying-sinusoid needs finite parameters and decay > 0 (decay = {decay})"
                    )));
                }
                Ok(())
            }
            EtaModel::FirstOrderLag { tau } => {
                if !(tau > 0.0 && tau.is_finite()) {
                    return Err(Error::Config(format!("first-order-lag needs tau > 0, got {tau}")));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EtaModel::None => "none",
            EtaModel::DecayingSinusoid { .. } => "decaying-sinusoid",
            EtaModel::FirstOrderLag { .. } => "first-order-lag",
        }
    }

    /// `∫₀^∞ η_i² dt` of the sinusoid for phase `phi`.
    pub fn sinusoid_energy(amplitude: f64, decay: f64, frequency: f64, phi: f64) -> f64 {
        let (l, w) = (decay, frequency);
        let (s2, c2) = (2.0 * phi).sin_cos();
        amplitude * amplitude * (1.0 / (4.0 * l) - (l * c2 - w * s2) / (4.0 * (l * l + w * w)))
    }
}

impl fmt::Display for EtaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EtaModel::None => f.write_str("none"),
            EtaModel::DecayingSinusoid { amplitude, decay, frequency } => {
                write!(f, "decaying-sinusoid:amplitude={amplitude},decay={decay},frequency={frequency}")
            }
            EtaModel::FirstOrderLag { tau } => write!(f, "first-order-lag:tau={tau}"),
        }
    }
}

/// `name` or `name:key=value,key=value`, e.g.
/// `decaying-sinusoid:amplitude=0.05,decay=0.5`.
impl FromStr for EtaModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let mut model = match name.trim() {
            "none" => EtaModel::None,
            "decaying-sinusoid" => EtaModel::DEFAULT_SINUSOID,
            "first-order-lag" => EtaModel::DEFAULT_LAG,
            other => {
                return Err(Error::Config(format!(
                    "unknown eta model `{other}` (expected none, decaying-sinusoid or first-order-lag)"
                )))
            }
        };
        for kv in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("eta parameter `{kv}` is not key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("eta parameter `{kv}` is not a number")))?;
            match (&mut model, k.trim()) {
                (EtaModel::DecayingSinusoid { amplitude, .. }, "amplitude") => *amplitude = v,
                (EtaModel::DecayingSinusoid { decay, .. }, "decay") => *decay = v,
                (EtaModel::DecayingSinusoid { frequency, .. }, "frequency") => *frequency = v,
                (EtaModel::FirstOrderLag { tau }, "tau") => *tau = v,
                (m, k) => return Err(Error::Config(format!("eta model {} has no parameter `{k}`", m.name()))),
            }
        }
        model.validate()?;
        Ok(model)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Euler,
    /// Classical RK4 with the command held over the step.
    Rk4,
}

/// Integrates `θ̇ = u + η(t)` over one step with `u` held constant.
pub fn step<F>(theta: &DVector<f64>, u: &DVector<f64>, eta: F, t: f64, dt: f64, integrator: Integrator) -> DVector<f64>
where
    F: Fn(f64) -> DVector<f64>,
{
    // The right-hand side does not depend on θ, so RK4 reduces to
    // Simpson's rule on η.
    match integrator {
        Integrator::Euler => theta + (u + eta(t)) * dt,
        Integrator::Rk4 => {
            let avg = (eta(t) + eta(t + 0.5 * dt) * 4.0 + eta(t + dt)) / 6.0;
            theta + (u + avg) * dt
        }
    }
}

/// Per-run disturbance state.
#[derive(Clone, Debug)]
pub struct Disturbance {
    model: EtaModel,
    phases: Vec<f64>,
    /// Actual joint velocity under the lag model.
    lag_velocity: DVector<f64>,
}

impl Disturbance {
    pub fn new(model: EtaModel, joints: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases = (0..joints).map(|_| rng.random_range(0.0..TAU)).collect();
        Self {
            model,
            phases,
            lag_velocity: DVector::zeros(joints),
        }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// `η` at time `t` for a command `u` (only the lag model uses `u`).
    pub fn eta(&self, t: f64, u: &DVector<f64>) -> DVector<f64> {
        match self.model {
            EtaModel::None => DVector::zeros(u.len()),
            EtaModel::DecayingSinusoid { amplitude, decay, frequency } => {
                let env = amplitude * (-decay * t).exp();
                DVector::from_iterator(self.phases.len(), self.phases.iter().map(|p| env * (frequency * t + p).sin()))
            }
            EtaModel::FirstOrderLag { .. } => &self.lag_velocity - u,
        }
    }

    /// `∫₀^∞ ‖η‖² dt` for the sinusoid model, `None` otherwise.
    pub fn total_energy(&self) -> Option<f64> {
        match self.model {
            EtaModel::DecayingSinusoid { amplitude, decay, frequency } => Some(
                self.phases
                    .iter()
                    .map(|&p| EtaModel::sinusoid_energy(amplitude, decay, frequency, p))
                    .sum(),
            ),
            _ => None,
        }
    }

    /// Advances the joints over `[t, t + dt]`.
    pub fn advance(&mut self, theta: &DVector<f64>, u: &DVector<f64>, t: f64, dt: f64, integrator: Integrator) -> DVector<f64> {
        match self.model {
            EtaModel::FirstOrderLag { tau } => {
                // Exact solution of τ v̇ = u − v with u held.
                let decay = (-dt / tau).exp();
                let v0 = &self.lag_velocity - u;
                let theta_next = theta + u * dt + &v0 * (tau * (1.0 - decay));
                self.lag_velocity = u + v0 * decay;
                theta_next
            }
            _ => step(theta, u, |s| self.eta(s, u), t, dt, integrator),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parse_models() {
        assert_eq!("none".parse::<EtaModel>().unwrap(), EtaModel::None);
        let m: EtaModel = "decaying-sinusoid:amplitude=0.1,decay=2".parse().unwrap();
        assert_eq!(m, EtaModel::DecayingSinusoid { amplitude: 0.1, decay: 2.0, frequency: 3.0 });
        assert_eq!("first-order-lag:tau=0.2".parse::<EtaModel>().unwrap(), EtaModel::FirstOrderLag { tau: 0.2 });
        assert!("first-order-lag:tau=0".parse::<EtaModel>().is_err());
        assert!("first-order-lag:decay=1".parse::<EtaModel>().is_err());
        assert!("white-noise".parse::<EtaModel>().is_err());
        let round: EtaModel = m.to_string().parse().unwrap();
        assert_eq!(round, m);
    }

    #[test]
    fn euler_step_cases() {
        let th = DVector::from_vec(vec![0.1, -0.2]);
        let zero = DVector::zeros(2);
        let none = |_: f64| DVector::zeros(2);
        assert_eq!(step(&th, &zero, none, 0.0, 0.1, Integrator::Euler), th);
        let u = DVector::from_vec(vec![1.0, 2.0]);
        let next = step(&th, &u, none, 0.0, 0.1, Integrator::Euler);
        assert_relative_eq!(next, &th + &u * 0.1);
    }

    #[test]
    fn sinusoid_energy_matches_quadrature() {
        let (a, l, w, p) = (0.05, 0.5, 3.0, 1.2);
        let h = 1e-4;
        let num: f64 = (0..400_000)
            .map(|i| {
                let t = (i as f64 + 0.5) * h;
                let e = a * (-l * t).exp() * (w * t + p).sin();
                e * e * h
            })
            .sum();
        assert_relative_eq!(num, EtaModel::sinusoid_energy(a, l, w, p), max_relative = 1e-6);
    }

    #[test]
    fn phases_depend_on_seed_only() {
        let a = Disturbance::new(EtaModel::DEFAULT_SINUSOID, 8, 7);
        let b = Disturbance::new(EtaModel::DEFAULT_SINUSOID, 8, 7);
        let c = Disturbance::new(EtaModel::DEFAULT_SINUSOID, 8, 8);
        assert_eq!(a.phases(), b.phases());
        assert_ne!(a.phases(), c.phases());
    }

    #[test]
    fn lag_converges_to_command() {
        let mut d = Disturbance::new(EtaModel::FirstOrderLag { tau: 0.1 }, 1, 0);
        let u = DVector::from_element(1, 1.0);
        let mut th = DVector::zeros(1);
        for i in 0..120 {
            th = d.advance(&th, &u, i as f64 / 60.0, 1.0 / 60.0, Integrator::Euler);
        }
        assert!(d.eta(2.0, &u).norm() < 1e-7);
        // θ(t) = t − τ(1 − e^{−t/τ})
        assert_relative_eq!(th[0], 2.0 - 0.1 * (1.0 - (-20.0f64).exp()), epsilon = 1e-12);
    }
}
