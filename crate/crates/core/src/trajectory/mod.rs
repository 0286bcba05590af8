//! Deposition references for the supported part geometries.
//!
//! Layers executed by a plan are numbered from 1. The per-scenario
//! reference functions also accept layer 0, the substrate level.

mod circular;
mod profile;
mod schedule;
mod walls;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::controller::TaskReference;
use crate::error::{Error, Result};

pub use circular::{bellmouth_reference, cylinder_reference, flare_radius_at};
pub use profile::{trapezoidal_timing, TrapezoidalProfile};
pub use schedule::{write_reference_csv, REFERENCE_COLUMNS, LayerReferenceStream, Phase, Schedule, Segment, TickReference};
pub use walls::{curved_wall_reference, inclined_wall_reference, singular_transit_reference, CurvedSection};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    InclinedWall,
    CurvedWall,
    Cylinder,
    BellMouth,
    /// Straight wall whose torch tilt sweeps through zero, forcing the
    /// positioner through its aligned configuration.
    SingularTransit,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::InclinedWall,
        Scenario::CurvedWall,
        Scenario::Cylinder,
        Scenario::BellMouth,
        Scenario::SingularTransit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::InclinedWall => "inclined-wall",
            Scenario::CurvedWall => "curved-wall",
            Scenario::Cylinder => "cylinder",
            Scenario::BellMouth => "bell-mouth",
            Scenario::SingularTransit => "singular-transit",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!("unknown scenario `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// Geometry and timing of one part. Lengths in mm, angles in rad.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepositionPlan {
    pub scenario: Scenario,
    /// Travel speed `V_ts` (mm/s).
    pub travel_speed: f64,
    /// Layer height `l_h`.
    pub layer_height: f64,
    /// Wall length `l_l` (straight-pass scenarios).
    pub wall_length: f64,
    /// Wall inclination `γ` (inclined wall) or the initial tilt of the
    /// singular-transit sweep.
    pub inclination: f64,
    /// Radius `R` of the curved-wall bend.
    pub curve_radius: f64,
    /// Heights `h1`, `h2` of the straight sections below and above the bend.
    pub first_section_height: f64,
    pub last_section_height: f64,
    /// Cylinder radius `r_c`.
    pub cylinder_radius: f64,
    /// Flare radius `r` and total flare angle of the bell mouth.
    pub flare_radius: f64,
    pub flare_angle: f64,
    /// `[o_x, o_y, o_z]`.
    #[serde(deserialize_with = "crate::fixed::exact")]
    pub offset: [f64; 3],
    /// Number of layers to execute; `None` runs the whole part.
    pub layers: Option<usize>,
    /// Overrides the computed layer count of the bend or flare.
    pub curve_layers: Option<usize>,
    /// Acceleration time `t_a` of the straight passes (s).
    pub accel_time: f64,
    pub alternate_direction: bool,
    /// Start-angle increment between circular layers (rad/layer).
    pub phase_lag_increment: f64,
    /// Pause before every layer after the first, with the reference held
    /// at the next layer's start (s).
    pub dwell: f64,
    /// Desired torch axis in the arm base frame.
    #[serde(deserialize_with = "crate::fixed::exact")]
    pub z_d: [f64; 3],
}

impl DepositionPlan {
    pub fn preset(scenario: Scenario) -> Self {
        let base = Self {
            scenario,
            travel_speed: 5.0,
            layer_height: 2.0,
            wall_length: 100.0,
            inclination: 0.0,
            curve_radius: 30.0,
            first_section_height: 30.0,
            last_section_height: 20.0,
            cylinder_radius: 80.0,
            flare_radius: 20.0,
            flare_angle: FRAC_PI_3,
            offset: [0.0, 0.0, 0.0],
            layers: None,
            curve_layers: None,
            accel_time: 0.1,
            alternate_direction: true,
            phase_lag_increment: PI / 36.0,
            dwell: 3.0,
            z_d: [0.0, 0.0, 1.0],
        };
        match scenario {
            Scenario::InclinedWall => Self {
                travel_speed: 7.5,
                layer_height: 1.6,
                wall_length: 150.0,
                inclination: PI / 4.0,
                offset: [0.0, -75.0, 0.0],
                layers: Some(20),
                ..base
            },
            Scenario::CurvedWall => Self {
                wall_length: 97.0,
                offset: [0.0, -48.5, 0.0],
                ..base
            },
            Scenario::Cylinder => Self { layers: Some(45), ..base },
            Scenario::BellMouth => Self {
                offset: [0.0, 0.0, 90.0],
                ..base
            },
            Scenario::SingularTransit => Self {
                inclination: 0.2,
                offset: [0.0, -50.0, 10.0],
                layers: Some(2),
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("travel_speed", self.travel_speed),
            ("layer_height", self.layer_height),
            ("wall_length", self.wall_length),
            ("curve_radius", self.curve_radius),
            ("cylinder_radius", self.cylinder_radius),
            ("flare_radius", self.flare_radius),
            ("flare_angle", self.flare_angle),
            ("accel_time", self.accel_time),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("plan.{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("first_section_height", self.first_section_height),
            ("last_section_height", self.last_section_height),
            ("dwell", self.dwell),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("plan.{name} must be >= 0, got {v}")));
            }
        }
        if !self.inclination.is_finite() || !self.phase_lag_increment.is_finite() || !self.offset.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("plan contains a non-finite angle or offset".into()));
        }
        let z = self.z_d_vector();
        if !(z.norm() > 0.0) || !z.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("plan.z_d must be a non-zero vector".into()));
        }
        if self.curve_layers == Some(0) {
            return Err(Error::Config("plan.curve_layers must be >= 1".into()));
        }
        let total = self.part_layer_count();
        if let Some(n) = self.layers {
            if n > total {
                return Err(Error::Config(format!(
                    "plan.layers = {n} exceeds the {total} layers of the {} part",
                    self.scenario
                )));
            }
        }
        if matches!(self.scenario, Scenario::InclinedWall | Scenario::CurvedWall | Scenario::SingularTransit) {
            TrapezoidalProfile::for_path(self.wall_length, self.travel_speed, self.accel_time)?;
        }
        Ok(())
    }

    /// Unit desired torch axis.
    pub fn z_d_vector(&self) -> Vector3<f64> {
        Vector3::from(self.z_d).normalize()
    }

    /// Layer count of the bend, `round(πR / (2 l_h))`.
    pub fn curve_layer_count(&self) -> usize {
        self.curve_layers
            .unwrap_or_else(|| round_count(PI * self.curve_radius / (2.0 * self.layer_height)))
    }

    /// Layer count of the flare, `round(r · angle / l_h)`.
    pub fn flare_layer_count(&self) -> usize {
        self.curve_layers
            .unwrap_or_else(|| round_count(self.flare_radius * self.flare_angle / self.layer_height))
    }

    /// Tilt increment of the bend, `π / (2 n_t)` on the rounded count.
    pub fn curve_increment(&self) -> f64 {
        FRAC_PI_2 / self.curve_layer_count() as f64
    }

    /// Tilt increment of the flare, `angle / n_t` on the rounded count.
    pub fn flare_increment(&self) -> f64 {
        self.flare_angle / self.flare_layer_count() as f64
    }

    /// Angular rate of the circular passes, `V_ts / r_c`.
    pub fn angular_rate(&self) -> f64 {
        self.travel_speed / self.cylinder_radius
    }

    /// Layers in the three curved-wall sections.
    pub fn curved_sections(&self) -> [usize; 3] {
        [
            round_count(self.first_section_height / self.layer_height),
            self.curve_layer_count(),
            round_count(self.last_section_height / self.layer_height),
        ]
    }

    /// Layers of the complete part (the upper bound for `layers`).
    pub fn part_layer_count(&self) -> usize {
        match self.scenario {
            Scenario::CurvedWall => self.curved_sections().iter().sum(),
            Scenario::BellMouth => self.flare_layer_count(),
            Scenario::InclinedWall | Scenario::Cylinder | Scenario::SingularTransit => {
                self.layers.unwrap_or(usize::MAX)
            }
        }
    }

    /// Layers the plan executes.
    pub fn layer_count(&self) -> usize {
        match self.layers {
            Some(n) => n,
            None => self.part_layer_count(),
        }
    }

    fn straight_profile(&self) -> Result<TrapezoidalProfile> {
        TrapezoidalProfile::for_path(self.wall_length, self.travel_speed, self.accel_time)
    }

    /// Duration of one layer pass (s).
    pub fn layer_duration(&self) -> Result<f64> {
        match self.scenario {
            Scenario::InclinedWall | Scenario::CurvedWall | Scenario::SingularTransit => {
                Ok(self.straight_profile()?.duration)
            }
            Scenario::Cylinder | Scenario::BellMouth => Ok(2.0 * PI / self.angular_rate()),
        }
    }

    /// Whether the pass of `layer` runs backwards.
    pub fn reversed(&self, layer: usize) -> bool {
        self.alternate_direction && layer % 2 == 1
    }

    /// Reference for executed layer `layer` at pass time `t`.
    pub fn reference(&self, layer: usize, t: f64) -> Result<TaskReference> {
        match self.scenario {
            Scenario::InclinedWall => inclined_wall_reference(self, layer, t),
            Scenario::CurvedWall => {
                let (section, n) = walls::curved_wall_layer(self, layer)?;
                curved_wall_reference(self, section, n, t)
            }
            Scenario::Cylinder => cylinder_reference(self, layer, t),
            Scenario::BellMouth => bellmouth_reference(self, layer, t),
            Scenario::SingularTransit => singular_transit_reference(self, layer, t),
        }
    }

    /// Build direction of `layer`: `F_d`'s z axis rotated by `q_d`.
    pub fn build_direction(&self, layer: usize) -> Result<Vector3<f64>> {
        Ok(self.reference(layer, 0.0)?.q_d.rotate(&Vector3::z()))
    }
}

fn round_count(x: f64) -> usize {
    x.round().max(0.0) as usize
}

pub(crate) fn check_layer(layer: usize, max: usize) -> Result<()> {
    if layer > max {
        Err(Error::InvalidLayer { layer, min: 0, max })
    } else {
        Ok(())
    }
}
