//! Full inclined-wall run through the harness: trace, summaries and plots
//! land in `out/example-inclined-wall`.

use waam_coord::harness::{run, HarnessConfig};
use waam_coord::trajectory::Scenario;

fn main() {
    let mut config = HarnessConfig::for_scenario(Scenario::InclinedWall);
    config.plan_overrides.insert("layers".into(), toml::Value::Integer(5));
    config.out = "out/example-inclined-wall".into();
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    };
    for (dir, s) in &report.runs {
        println!("{} layers, {} records -> {}", s.layers, s.records, dir.display());
        for l in &s.layer_summaries {
            println!(
                "  layer {:2}: position RMS {:.3e} mm, max {:.3e} mm, alpha RMS {:.3e} rad",
                l.layer, l.position_rms, l.position_max, l.alpha_rms
            );
        }
    }
}
