//! Straight passes along `F_d`'s y axis.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Vector2, Vector3};

use super::{check_layer, DepositionPlan};
use crate::controller::TaskReference;
use crate::error::{Error, Result};
use crate::quat::UnitQuat;

/// `[cos(γ/2), 0, sin(γ/2), 0]`
fn tilt_about_y(gamma: f64) -> UnitQuat {
    UnitQuat::from_axis_angle(&Vector3::y(), gamma)
}

/// `(s, ṡ)` along the pass, reversed on odd layers when alternating.
fn pass_timing(plan: &DepositionPlan, layer: usize, t: f64) -> Result<(f64, f64)> {
    let (s, sd) = plan.straight_profile()?.eval(t)?;
    Ok(if plan.reversed(layer) { (1.0 - s, -sd) } else { (s, sd) })
}

fn straight(plan: &DepositionPlan, layer: usize, t: f64, p_xz: (f64, f64), gamma: f64) -> Result<TaskReference> {
    let (s, sd) = pass_timing(plan, layer, t)?;
    Ok(TaskReference {
        p_d: Vector3::new(p_xz.0, plan.wall_length * s + plan.offset[1], p_xz.1),
        q_d: tilt_about_y(gamma),
        pdot_d: Vector3::new(0.0, plan.wall_length * sd, 0.0),
        omega_d: Vector3::zeros(),
        z_d: plan.z_d_vector(),
        omega_sd: Vector2::zeros(),
    })
}

/// Wall inclined by `γ` about `F_d`'s y axis:
/// `p_d = [sin γ n l_h + o_x, l_l s + o_y, cos γ n l_h]`.
pub fn inclined_wall_reference(plan: &DepositionPlan, layer: usize, t: f64) -> Result<TaskReference> {
    check_layer(layer, plan.layer_count())?;
    let g = plan.inclination;
    let h = layer as f64 * plan.layer_height;
    straight(plan, layer, t, (g.sin() * h + plan.offset[0], g.cos() * h), g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvedSection {
    /// Vertical wall of height `h1`.
    Foundation,
    /// Bend of radius `R`, tilting by `Δγ` per layer.
    Bend,
    /// Horizontal wall of height `h2` grown along `F_d`'s x axis.
    Top,
}

/// Maps an executed curved-wall layer to its section and in-section index.
pub(crate) fn curved_wall_layer(plan: &DepositionPlan, layer: usize) -> Result<(CurvedSection, usize)> {
    let [n1, nt, n3] = plan.curved_sections();
    let total = n1 + nt + n3;
    if layer > total {
        return Err(Error::InvalidLayer { layer, min: 0, max: total });
    }
    Ok(if layer <= n1 {
        (CurvedSection::Foundation, layer)
    } else if layer <= n1 + nt {
        (CurvedSection::Bend, layer - n1)
    } else {
        (CurvedSection::Top, layer - n1 - nt)
    })
}

/// Three-section curved wall. `n` counts layers inside `section`.
pub fn curved_wall_reference(plan: &DepositionPlan, section: CurvedSection, n: usize, t: f64) -> Result<TaskReference> {
    let [n1, nt, n3] = plan.curved_sections();
    let l_h = plan.layer_height;
    let [o_x, _, o_z] = plan.offset;
    let bend_base = o_z + n1 as f64 * l_h;
    let (global, xz, gamma) = match section {
        CurvedSection::Foundation => {
            check_layer(n, n1)?;
            (n, (o_x, o_z + n as f64 * l_h), 0.0)
        }
        CurvedSection::Bend => {
            check_layer(n, nt)?;
            let g = n as f64 * plan.curve_increment();
            let h = n as f64 * l_h;
            (n1 + n, (g.sin() * h + o_x, g.cos() * h + bend_base), g)
        }
        CurvedSection::Top => {
            check_layer(n, n3)?;
            let x = o_x + (nt + n) as f64 * l_h;
            (n1 + nt + n, (x, bend_base), FRAC_PI_2)
        }
    };
    straight(plan, global, t, xz, gamma)
}

/// Straight pass whose torch tilt sweeps linearly from `+γ0` to `−γ0`,
/// so the positioner passes through its aligned configuration mid-pass.
pub fn singular_transit_reference(plan: &DepositionPlan, layer: usize, t: f64) -> Result<TaskReference> {
    check_layer(layer, plan.layer_count())?;
    let (s, sd) = pass_timing(plan, layer, t)?;
    let g0 = plan.inclination;
    let gamma = g0 * (1.0 - 2.0 * s);
    Ok(TaskReference {
        p_d: Vector3::new(
            plan.offset[0],
            plan.wall_length * s + plan.offset[1],
            plan.offset[2] + layer as f64 * plan.layer_height,
        ),
        q_d: tilt_about_y(gamma),
        pdot_d: Vector3::new(0.0, plan.wall_length * sd, 0.0),
        omega_d: Vector3::new(0.0, -2.0 * g0 * sd, 0.0),
        z_d: plan.z_d_vector(),
        omega_sd: Vector2::zeros(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Scenario;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn inclined_wall_examples() {
        let plan = DepositionPlan {
            offset: [0.0; 3],
            ..DepositionPlan::preset(Scenario::InclinedWall)
        };
        let r = inclined_wall_reference(&plan, 0, 0.0).unwrap();
        assert_eq!(r.p_d, Vector3::zeros());
        let r = inclined_wall_reference(&plan, 20, 0.0).unwrap();
        let expected = (PI / 4.0).sin() * 32.0;
        assert_relative_eq!(r.p_d.x, expected, epsilon = 1e-12);
        assert_relative_eq!(r.p_d.z, expected, epsilon = 1e-12);
        assert_relative_eq!(r.p_d.x, 22.627416997969522, epsilon = 1e-12);
        let q = r.q_d.to_array();
        assert_relative_eq!(q[0], (PI / 8.0).cos(), epsilon = 1e-15);
        assert_eq!(q[1], 0.0);
        assert_relative_eq!(q[2], (PI / 8.0).sin(), epsilon = 1e-15);
        assert!(inclined_wall_reference(&plan, 21, 0.0).is_err());
    }

    #[test]
    fn odd_layers_run_backwards() {
        let plan = DepositionPlan::preset(Scenario::InclinedWall);
        let a = inclined_wall_reference(&plan, 2, 0.0).unwrap();
        let b = inclined_wall_reference(&plan, 1, 0.0).unwrap();
        assert_relative_eq!(a.p_d.y, plan.offset[1]);
        assert_relative_eq!(b.p_d.y, plan.offset[1] + plan.wall_length);
        let mid = inclined_wall_reference(&plan, 1, 10.0).unwrap();
        assert_relative_eq!(mid.pdot_d.y, -plan.travel_speed, epsilon = 1e-12);
    }

    #[test]
    fn curved_wall_sections() {
        let plan = DepositionPlan::preset(Scenario::CurvedWall);
        assert_eq!(curved_wall_layer(&plan, 15).unwrap(), (CurvedSection::Foundation, 15));
        assert_eq!(curved_wall_layer(&plan, 16).unwrap(), (CurvedSection::Bend, 1));
        assert_eq!(curved_wall_layer(&plan, 40).unwrap(), (CurvedSection::Top, 1));
        assert!(curved_wall_layer(&plan, 50).is_err());

        let mid = curved_wall_reference(&plan, CurvedSection::Bend, 12, 0.0).unwrap();
        let q = mid.q_d.to_array();
        assert_relative_eq!(q[0], (PI / 8.0).cos(), epsilon = 1e-15);
        assert_relative_eq!(q[2], (PI / 8.0).sin(), epsilon = 1e-15);
        assert!(curved_wall_reference(&plan, CurvedSection::Bend, 25, 0.0).is_err());

        let top = curved_wall_reference(&plan, CurvedSection::Top, 1, 0.0).unwrap();
        assert_relative_eq!(top.p_d.x, 50.0);
        assert_relative_eq!(top.p_d.z, 30.0);
    }

    #[test]
    fn transit_sweeps_through_zero_tilt() {
        let plan = DepositionPlan::preset(Scenario::SingularTransit);
        let big_t = plan.layer_duration().unwrap();
        let a = singular_transit_reference(&plan, 0, 0.0).unwrap();
        let m = singular_transit_reference(&plan, 0, 0.5 * big_t).unwrap();
        let b = singular_transit_reference(&plan, 0, big_t).unwrap();
        assert_relative_eq!(a.q_d.angle(), 0.2, epsilon = 1e-12);
        assert!(m.q_d.angle() < 1e-12);
        assert_relative_eq!(b.q_d.eps.y, -(0.1f64).sin(), epsilon = 1e-12);
    }
}
