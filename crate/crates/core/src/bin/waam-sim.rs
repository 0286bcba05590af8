use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use waam_coord::harness::{self, FormulationChoice, HarnessConfig, HarnessError, Overrides, CONFIG_ENV};
use waam_coord::sim::EtaModel;
use waam_coord::trajectory::Scenario;

#[derive(Parser)]
#[command(name = "waam-sim", version, about = "Coordinated arm + positioner deposition simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trace, summary and plot files.
    Run(Common),
    /// Feed the same closed loop through both formulations and report the
    /// largest disagreement.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Harness config file (TOML).
    #[arg(long, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// inclined-wall, curved-wall, cylinder, bell-mouth or singular-transit.
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// none, decaying-sinusoid[:amplitude=..,decay=..,frequency=..] or
    /// first-order-lag[:tau=..].
    #[arg(long)]
    eta: Option<EtaModel>,
    /// augmented, constrained or both.
    #[arg(long)]
    formulation: Option<FormulationChoice>,
}

impl Common {
    fn config(&self) -> Result<HarnessConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => HarnessConfig::load(path)?,
            None => HarnessConfig::default(),
        };
        cfg.apply(&Overrides {
            scenario: self.scenario,
            layers: self.layers,
            seed: self.seed,
            out: self.out.clone(),
            eta: self.eta,
            formulation: self.formulation,
        });
        Ok(cfg)
    }
}

fn execute(command: &Command) -> Result<(), HarnessError> {
    match command {
        Command::Run(c) => {
            let report = harness::run(&c.config()?)?;
            for (dir, s) in &report.runs {
                println!(
                    "{} [{}]: {} layers, {} records, final |e_p| {:.3e} mm, final alpha {:.3e} rad, min sigma {:.3e} ({} ticks below threshold) -> {}",
                    s.scenario,
                    s.formulation,
                    s.layers,
                    s.records,
                    s.final_position_error,
                    s.final_alpha,
                    s.min_sigma,
                    s.singular_ticks,
                    dir.display()
                );
            }
            if let Some(c) = &report.comparison {
                print_comparison(c);
            }
        }
        Command::Compare(c) => print_comparison(&harness::compare_formulations(&c.config()?)?),
    }
    Ok(())
}

fn print_comparison(c: &harness::ComparisonReport) {
    println!(
        "{}: compared {} of {} ticks ({} singular excluded); max task velocity deviation {:.3e}, max joint command deviation {:.3e} (t = {:.3} s)",
        c.scenario, c.compared, c.ticks, c.singular_ticks, c.max_task_velocity_deviation, c.max_joint_command_deviation, c.worst_t
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("waam-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
