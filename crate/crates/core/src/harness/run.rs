use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::numfmt::sig9;
use crate::sim::{EtaModel, Formulation, LayerSummary, SimTrace, Simulator};
use crate::trajectory::{write_reference_csv, DepositionPlan};

use super::compare::{compare_formulations, ComparisonReport};
use super::plot::{LinePlot, Series};
use super::{io_error, HarnessConfig, HarnessError};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub formulation: String,
    pub eta: String,
    pub seed: u64,
    pub dt: f64,
    pub layers: usize,
    pub records: usize,
    pub duration: f64,
    pub final_position_error: f64,
    pub final_orientation_error: f64,
    pub final_alpha: f64,
    pub max_position_error: f64,
    pub max_alpha: f64,
    pub min_sigma: f64,
    pub sigma_threshold: f64,
    /// Ticks with `σ_min(J_A)` below the filter threshold.
    pub singular_ticks: usize,
    pub slew_limited_ticks: usize,
    pub alignment_degenerate_ticks: usize,
    pub max_main_residual: f64,
    pub max_secondary_residual: f64,
    pub lyapunov_initial: f64,
    pub lyapunov_max: f64,
    pub lyapunov_final: f64,
    /// `Σ ηᵀ J_Aᵀ J_A η dt`
    pub eta_energy: f64,
    pub eta_drift: f64,
    /// Closed-form `∫ ηᵀη dt` over an unbounded horizon, when available.
    pub eta_l2_energy: Option<f64>,
    pub layer_summaries: Vec<LayerSummary>,
}

impl RunSummary {
    fn new(config: &HarnessConfig, plan: &DepositionPlan, formulation: Formulation, trace: &SimTrace, eta_l2: Option<f64>) -> Self {
        let recs = &trace.records;
        let last = recs.last().expect("trace has at least one record");
        let fold_max = |f: &dyn Fn(&crate::sim::TraceRecord) -> f64| recs.iter().map(f).fold(0.0, f64::max);
        Self {
            scenario: plan.scenario.name().to_string(),
            formulation: formulation.name().to_string(),
            eta: config.sim.eta.to_string(),
            seed: config.sim.seed,
            dt: trace.dt,
            layers: trace.layers().len(),
            records: recs.len(),
            duration: trace.duration(),
            final_position_error: last.e_p.norm(),
            final_orientation_error: last.e_q.eps.norm(),
            final_alpha: last.alpha,
            max_position_error: fold_max(&|r| r.e_p.norm()),
            max_alpha: fold_max(&|r| r.alpha),
            min_sigma: recs.iter().map(|r| r.sigma_min).fold(f64::INFINITY, f64::min),
            sigma_threshold: config.dls.sigma_threshold,
            singular_ticks: recs.iter().filter(|r| r.sigma_min < config.dls.sigma_threshold).count(),
            slew_limited_ticks: recs.iter().filter(|r| r.slew_limited).count(),
            alignment_degenerate_ticks: recs.iter().filter(|r| r.alignment_degenerate).count(),
            max_main_residual: fold_max(&|r| r.main_residual),
            max_secondary_residual: fold_max(&|r| r.secondary_residual),
            lyapunov_initial: recs[0].v,
            lyapunov_max: fold_max(&|r| r.v),
            lyapunov_final: last.v,
            eta_energy: last.eta_energy,
            eta_drift: last.eta_drift,
            eta_l2_energy: eta_l2,
            layer_summaries: trace.layer_summaries(config.transient),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub runs: Vec<(PathBuf, RunSummary)>,
    pub comparison: Option<ComparisonReport>,
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, HarnessError> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<(), HarnessError> {
    w.flush().map_err(|e| io_error(path, e))
}

/// Runs the configured scenario and writes its output files. Returns the
/// per-formulation summaries.
pub fn run(config: &HarnessConfig) -> Result<RunReport, HarnessError> {
    let (chain, plan) = config.validate()?;
    fs::create_dir_all(&config.out).map_err(|e| io_error(&config.out, e))?;

    let formulations = config.formulation.formulations();
    let mut runs = Vec::new();
    for &formulation in formulations {
        let dir = if formulations.len() > 1 {
            config.out.join(formulation.name())
        } else {
            config.out.clone()
        };
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;

        let mut sim = Simulator::new(&chain, config.gains, config.dls, config.sim)?;
        sim.formulation = formulation;
        let trace = sim.run_plan(&plan, None)?;
        let eta_l2 = match config.sim.eta {
            EtaModel::None => Some(0.0),
            _ => crate::sim::Disturbance::new(config.sim.eta, chain.dof(), config.sim.seed).total_energy(),
        };
        let summary = RunSummary::new(config, &plan, formulation, &trace, eta_l2);
        write_outputs(config, &plan, &trace, &summary, &dir)?;
        runs.push((dir, summary));
    }

    let comparison = if formulations.len() > 1 {
        let report = compare_formulations(config)?;
        write_json(&config.out.join("comparison.json"), &report)?;
        Some(report)
    } else {
        None
    };
    Ok(RunReport { runs, comparison })
}

fn write_outputs(config: &HarnessConfig, plan: &DepositionPlan, trace: &SimTrace, summary: &RunSummary, dir: &Path) -> Result<(), HarnessError> {
    let path = dir.join("trace.csv");
    trace.write_csv_every(create(&path)?, config.output.trace_every)?;

    let path = dir.join("reference.csv");
    write_reference_csv(plan, config.sim.dt, create(&path)?)?;

    write_json(&dir.join("summary.json"), summary)?;

    let layers = trace.layers();
    let path = dir.join("layer_errors.csv");
    let mut w = csv_writer(&path)?;
    let io = |e: csv::Error| io_error(&path, e);
    w.write_record(["layer", "local_t", "e_p_x", "e_p_y", "e_p_z", "e_p_norm", "e_eps_norm", "alpha"]).map_err(io)?;
    for &layer in &layers {
        for r in trace.layer_records(layer) {
            let mut row = vec![layer.to_string(), sig9(r.local_t)];
            row.extend(r.e_p.iter().map(|v| sig9(*v)));
            row.extend([sig9(r.e_p.norm()), sig9(r.e_q.eps.norm()), sig9(r.alpha)]);
            w.write_record(&row).map_err(io)?;
        }
    }
    finish(w, &path)?;

    let path = dir.join("trajectory.csv");
    let mut w = csv_writer(&path)?;
    let io = |e: csv::Error| io_error(&path, e);
    w.write_record(["t", "layer", "p_d_x", "p_d_y", "p_d_z", "p_x", "p_y", "p_z"]).map_err(io)?;
    for r in trace.records.iter().filter(|r| r.phase == crate::trajectory::Phase::Deposit) {
        let p_d = r.p + r.e_p;
        let mut row = vec![sig9(r.t), r.layer.to_string()];
        row.extend(p_d.iter().chain(r.p.iter()).map(|v| sig9(*v)));
        w.write_record(&row).map_err(io)?;
    }
    finish(w, &path)?;

    let rms = if layers.is_empty() { None } else { Some(trace.rms_summary()?) };
    if let Some(rms) = &rms {
        let path = dir.join("rms.csv");
        let mut w = csv_writer(&path)?;
        let io = |e: csv::Error| io_error(&path, e);
        let mut header = vec!["t".to_string()];
        for (name, _) in &rms.channels {
            header.push(format!("{name}_rms"));
            header.push(format!("{name}_std"));
        }
        w.write_record(&header).map_err(io)?;
        for (i, t) in rms.t.iter().enumerate() {
            let mut row = vec![sig9(*t)];
            for (_, band) in &rms.channels {
                row.push(sig9(band.rms[i]));
                row.push(sig9(band.std[i]));
            }
            w.write_record(&row).map_err(io)?;
        }
        finish(w, &path)?;
    }

    if config.output.plots {
        write_plots(trace, &layers, rms.as_ref(), dir)?;
    }
    Ok(())
}

fn write_plots(trace: &SimTrace, layers: &[usize], rms: Option<&crate::sim::RmsSummary>, dir: &Path) -> Result<(), HarnessError> {
    let per_layer = |title: &str, y: &str, f: &dyn Fn(&crate::sim::TraceRecord) -> f64| {
        let mut plot = LinePlot::new(title, "time in pass (s)", y);
        for &layer in layers {
            let points = trace.layer_records(layer).map(|r| (r.local_t, f(r))).collect();
            let label = if layers.len() <= 12 { format!("layer {layer}") } else { String::new() };
            plot.series.push(Series::new(label, points));
        }
        plot
    };
    let plot = per_layer("Position error per layer", "|e_p| (mm)", &|r| r.e_p.norm());
    write_text(&dir.join("errors_position.svg"), &plot.to_svg())?;
    let plot = per_layer("Torch axis misalignment per layer", "alpha (rad)", &|r| r.alpha);
    write_text(&dir.join("errors_alignment.svg"), &plot.to_svg())?;

    if let Some(rms) = rms {
        let mut plot = LinePlot::new(format!("RMS across {} layers", rms.layers), "time in pass (s)", "error");
        for name in ["e_p_norm", "alpha"] {
            if let Some(band) = rms.channel(name) {
                let points = rms.t.iter().copied().zip(band.rms.iter().copied()).collect();
                plot.series.push(Series { label: format!("{name} rms"), points, band: Some(band.std.clone()) });
            }
        }
        write_text(&dir.join("rms.svg"), &plot.to_svg())?;
    }

    let deposit: Vec<_> = trace.records.iter().filter(|r| r.phase == crate::trajectory::Phase::Deposit).collect();
    for (file, title, (a, b)) in [
        ("trajectory_xy.svg", "TCP path, top view", (0usize, 1usize)),
        ("trajectory_xz.svg", "TCP path, side view", (0, 2)),
    ] {
        let axis = ["x (mm)", "y (mm)", "z (mm)"];
        let mut plot = LinePlot::new(title, axis[a], axis[b]);
        plot.equal_axes = true;
        plot.series.push(Series::new("actual", deposit.iter().map(|r| (r.p[a], r.p[b])).collect()));
        plot.series.push(Series::new(
            "reference",
            deposit.iter().map(|r| (r.p[a] + r.e_p[a], r.p[b] + r.e_p[b])).collect(),
        ));
        write_text(&dir.join(file), &plot.to_svg())?;
    }
    Ok(())
}
