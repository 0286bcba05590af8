use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trapezoidal time scaling `s(t) ∈ [0, 1]`: constant acceleration for
/// `t_a`, cruise, then a symmetric deceleration ending at `duration`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidalProfile {
    pub t_a: f64,
    pub duration: f64,
}

impl TrapezoidalProfile {
    pub fn new(t_a: f64, duration: f64) -> Result<Self> {
        if !(t_a > 0.0 && duration.is_finite() && t_a <= 0.5 * duration) {
            return Err(Error::Config(format!(
                "trapezoid needs 0 < t_a <= T/2 (t_a = {t_a}, T = {duration})"
            )));
        }
        Ok(Self { t_a, duration })
    }

    /// Profile covering `length` at cruise speed `speed`: `T = length/speed + t_a`.
    pub fn for_path(length: f64, speed: f64, t_a: f64) -> Result<Self> {
        if !(length > 0.0 && speed > 0.0) {
            return Err(Error::Config(format!("path length and speed must be > 0 ({length}, {speed})")));
        }
        Self::new(t_a, length / speed + t_a)
    }

    pub fn cruise_rate(&self) -> f64 {
        1.0 / (self.duration - self.t_a)
    }

    /// `(s, ṡ)` at time `t`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let (t_a, big_t) = (self.t_a, self.duration);
        if !(0.0..=big_t).contains(&t) {
            return Err(Error::TimeOutOfRange { t, duration: big_t });
        }
        let v = self.cruise_rate();
        Ok(if t < t_a {
            (v * t * t / (2.0 * t_a), v * t / t_a)
        } else if t <= big_t - t_a {
            (v * (t - 0.5 * t_a), v)
        } else {
            let r = big_t - t;
            (1.0 - v * r * r / (2.0 * t_a), v * r / t_a)
        })
    }
}

/// `(s, ṡ)` of `profile` at `t`.
pub fn trapezoidal_timing(t: f64, profile: &TrapezoidalProfile) -> Result<(f64, f64)> {
    profile.eval(t)
}
