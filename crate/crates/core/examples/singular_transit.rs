//! Drives the deposition frame through the aligned-axis singularity and
//! prints how the damped inverse behaves around it.

use waam_coord::controller::ControlGains;
use waam_coord::sim::run_deposition;
use waam_coord::sim::SimConfig;
use waam_coord::singularity::DlsConfig;
use waam_coord::trajectory::{DepositionPlan, Scenario};
use waam_coord::default_chain;

fn main() -> waam_coord::Result<()> {
    let chain = default_chain();
    let dls = DlsConfig::default();
    let plan = DepositionPlan::preset(Scenario::SingularTransit);
    let trace = run_deposition(&chain, &plan, &ControlGains::default(), &dls, &SimConfig::default())?;
    println!("{:>7} {:>11} {:>11} {:>11} {:>11} {:>11}", "t", "sigma_min", "|u|", "main res", "sec res", "alpha");
    let mut last_band = false;
    for (i, r) in trace.records.iter().enumerate() {
        let band = r.sigma_min < dls.sigma_threshold;
        if i % 60 == 0 || band != last_band {
            let u = r.u.iter().map(|x| x * x).sum::<f64>().sqrt();
            println!(
                "{:7.2} {:11.3e} {:11.3e} {:11.3e} {:11.3e} {:11.3e}{}",
                r.t,
                r.sigma_min,
                u,
                r.main_residual,
                r.secondary_residual,
                r.alpha,
                if band { "  damped" } else { "" }
            );
        }
        last_band = band;
    }
    let damped = trace.records.iter().filter(|r| r.sigma_min < dls.sigma_threshold).count();
    println!("{damped} of {} ticks inside the damping band", trace.records.len());
    Ok(())
}
