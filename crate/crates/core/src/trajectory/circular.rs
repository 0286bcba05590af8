//! Circular passes about `F_d`'s z axis.

use nalgebra::{Vector2, Vector3};

use super::{check_layer, DepositionPlan};
use crate::controller::TaskReference;
use crate::error::{Error, Result};
use crate::quat::UnitQuat;

fn circle(plan: &DepositionPlan, layer: usize, t: f64, radius: f64, z: f64, q_d: UnitQuat) -> Result<TaskReference> {
    let duration = plan.layer_duration()?;
    if !(0.0..=duration).contains(&t) {
        return Err(Error::TimeOutOfRange { t, duration });
    }
    let w = plan.angular_rate();
    let theta = w * t + layer as f64 * plan.phase_lag_increment;
    let (s, c) = theta.sin_cos();
    Ok(TaskReference {
        p_d: Vector3::new(radius * s + plan.offset[0], -radius * c + plan.offset[1], z),
        q_d,
        pdot_d: Vector3::new(radius * w * c, radius * w * s, 0.0),
        omega_d: Vector3::zeros(),
        z_d: plan.z_d_vector(),
        omega_sd: Vector2::zeros(),
    })
}

/// `p_d = [r_c sin(ωt + Δθ) + o_x, −r_c cos(ωt + Δθ) + o_y, n l_h]` with
/// `Δθ = n · phase_lag_increment`, torch normal to the surface.
pub fn cylinder_reference(plan: &DepositionPlan, layer: usize, t: f64) -> Result<TaskReference> {
    check_layer(layer, plan.layer_count())?;
    let q_d = UnitQuat::from_parts_unchecked(-1.0, Vector3::zeros());
    circle(plan, layer, t, plan.cylinder_radius, layer as f64 * plan.layer_height, q_d)
}

/// Flaring circle: radius `r_c + (1 − cos(nΔγ)) r`, height
/// `r sin(nΔγ) + o_z`, torch tilted by `nΔγ` about `F_d`'s y axis.
pub fn bellmouth_reference(plan: &DepositionPlan, layer: usize, t: f64) -> Result<TaskReference> {
    check_layer(layer, plan.flare_layer_count())?;
    let g = layer as f64 * plan.flare_increment();
    let r = plan.flare_radius;
    let r_cn = plan.cylinder_radius + (1.0 - g.cos()) * r;
    let q_d = UnitQuat::from_axis_angle(&Vector3::y(), g);
    circle(plan, layer, t, r_cn, r * g.sin() + plan.offset[2], q_d)
}

/// Radius of flare layer `layer`.
pub fn flare_radius_at(plan: &DepositionPlan, layer: usize) -> f64 {
    let g = layer as f64 * plan.flare_increment();
    plan.cylinder_radius + (1.0 - g.cos()) * plan.flare_radius
}
