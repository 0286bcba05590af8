//! Layer counts, pass durations and start poses of every preset scenario.

use waam_coord::trajectory::{flare_radius_at, DepositionPlan, Scenario, Schedule};

fn main() -> waam_coord::Result<()> {
    let dt = 1.0 / 60.0;
    for scenario in Scenario::ALL {
        let plan = DepositionPlan::preset(scenario);
        let schedule = Schedule::new(&plan, dt)?;
        println!(
            "{scenario}: {} layers, pass {:.2} s, schedule {:.1} s ({} ticks)",
            plan.layer_count(),
            plan.layer_duration()?,
            schedule.duration(),
            schedule.total_ticks
        );
        for layer in [1, plan.layer_count()] {
            let r = plan.reference(layer, 0.0)?;
            let d = plan.build_direction(layer)?;
            println!(
                "  layer {layer:3}: start [{:8.3}, {:8.3}, {:8.3}] mm, build direction [{:.3}, {:.3}, {:.3}]",
                r.p_d.x, r.p_d.y, r.p_d.z, d.x, d.y, d.z
            );
        }
    }
    let curved = DepositionPlan::preset(Scenario::CurvedWall);
    println!("\ncurved wall sections {:?}, tilt step {:.5} rad", curved.curved_sections(), curved.curve_increment());
    let cylinder = DepositionPlan::preset(Scenario::Cylinder);
    println!("circular passes at {} rad/s", cylinder.angular_rate());
    let bell = DepositionPlan::preset(Scenario::BellMouth);
    println!("bell mouth: final radius {:.3} mm over {} layers", flare_radius_at(&bell, bell.flare_layer_count()), bell.flare_layer_count());
    Ok(())
}
