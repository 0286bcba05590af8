//! Per-tick simulation records, their CSV export, and error statistics.

use std::io::Write;

use nalgebra::{Vector2, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numfmt::sig9;
use crate::quat::UnitQuat;
use crate::trajectory::Phase;

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    /// Layer the tick belongs to (0 before any layer).
    pub layer: usize,
    pub phase: Phase,
    pub local_t: f64,
    pub theta: Vec<f64>,
    pub p: Vector3<f64>,
    pub q: UnitQuat,
    pub e_p: Vector3<f64>,
    pub e_q: UnitQuat,
    pub e_s: Vector2<f64>,
    pub alpha: f64,
    pub u: Vec<f64>,
    pub sigma_min: f64,
    /// Lyapunov function value.
    pub v: f64,
    /// `ηᵀ J_Aᵀ J_A η` at this tick.
    pub eta_power: f64,
    /// `Σ ηᵀ J_Aᵀ J_A η dt` up to this tick.
    pub eta_energy: f64,
    /// `Σ ‖J_A η‖ dt` up to this tick.
    pub eta_drift: f64,
    /// `‖(J_A u − [ū1; ū2])_{1..6}‖` and the same over the alignment rows.
    pub main_residual: f64,
    pub secondary_residual: f64,
    pub alignment_degenerate: bool,
    /// The commanded velocity was clipped by the slew limit.
    pub slew_limited: bool,
}

impl TraceRecord {
    pub fn position_error(&self) -> f64 {
        self.e_p.norm()
    }

    pub fn orientation_error(&self) -> f64 {
        self.e_q.eps.norm()
    }
}

/// One simulated run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimTrace {
    pub dt: f64,
    pub table_dof: usize,
    pub records: Vec<TraceRecord>,
}

impl SimTrace {
    pub fn joint_count(&self) -> usize {
        self.records.first().map_or(0, |r| r.theta.len())
    }

    pub fn duration(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    pub fn layers(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for r in &self.records {
            if r.phase == Phase::Deposit && r.layer > 0 && out.last() != Some(&r.layer) {
                out.push(r.layer);
            }
        }
        out
    }

    /// Deposition records of `layer`.
    pub fn layer_records(&self, layer: usize) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.layer == layer && r.phase == Phase::Deposit)
    }

    pub fn columns(&self) -> Vec<String> {
        let m = self.joint_count();
        let mut c = vec!["t".to_string()];
        c.extend((1..=m).map(|i| format!("theta{i}")));
        c.extend(["p_x", "p_y", "p_z", "q_eta", "q_ex", "q_ey", "q_ez"].map(String::from));
        c.extend(["e_p_x", "e_p_y", "e_p_z", "e_eta", "e_ex", "e_ey", "e_ez", "e_s1", "e_s2", "alpha"].map(String::from));
        c.extend((1..=m).map(|i| format!("u{i}")));
        c.push("sigma_min".into());
        c.push("V".into());
        c
    }

    /// CSV with the fixed column order of [`SimTrace::columns`], nine
    /// significant digits per value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_csv_every(out, 1)
    }

    /// Like [`SimTrace::write_csv`] but keeps only every `every`-th record
    /// (the last record is always written).
    pub fn write_csv_every<W: Write>(&self, out: W, every: usize) -> Result<()> {
        let every = every.max(1);
        let err = |e: csv::Error| Error::Io(format!("writing trace: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns()).map_err(err)?;
        let mut row: Vec<String> = Vec::new();
        let last = self.records.len().saturating_sub(1);
        for (i, r) in self.records.iter().enumerate() {
            if i % every != 0 && i != last {
                continue;
            }
            row.clear();
            row.push(sig9(r.t));
            row.extend(r.theta.iter().map(|v| sig9(*v)));
            row.extend(r.p.iter().map(|v| sig9(*v)));
            row.extend(r.q.to_array().iter().map(|v| sig9(*v)));
            row.extend(r.e_p.iter().map(|v| sig9(*v)));
            row.extend(r.e_q.to_array().iter().map(|v| sig9(*v)));
            row.extend(r.e_s.iter().map(|v| sig9(*v)));
            row.push(sig9(r.alpha));
            row.extend(r.u.iter().map(|v| sig9(*v)));
            row.push(sig9(r.sigma_min));
            row.push(sig9(r.v));
            w.write_record(&row).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Io(format!("writing trace: {e}")))?;
        Ok(())
    }

    /// Statistics of every deposited layer, ignoring the first `transient`
    /// seconds of each pass.
    pub fn layer_summaries(&self, transient: f64) -> Vec<LayerSummary> {
        self.layers()
            .into_iter()
            .map(|layer| LayerSummary::from_records(layer, self.layer_records(layer), transient))
            .collect()
    }

    /// Per-instant RMS across layers of the standard error channels.
    pub fn rms_summary(&self) -> Result<RmsSummary> {
        let layers = self.layers();
        let mut channels: Vec<(String, Vec<Vec<f64>>)> = RMS_CHANNELS.iter().map(|n| (n.to_string(), Vec::new())).collect();
        for layer in &layers {
            let recs: Vec<&TraceRecord> = self.layer_records(*layer).collect();
            for (name, series) in channels.iter_mut() {
                series.push(recs.iter().map(|r| channel_value(name, r)).collect());
            }
        }
        let mut bands = Vec::with_capacity(channels.len());
        for (name, series) in &channels {
            bands.push((name.clone(), rms_errors(series)?));
        }
        let samples = bands.first().map_or(0, |(_, b)| b.rms.len());
        Ok(RmsSummary {
            layers: layers.len(),
            t: (0..samples).map(|i| i as f64 * self.dt).collect(),
            channels: bands,
        })
    }
}

pub const RMS_CHANNELS: [&str; 9] = ["e_p_x", "e_p_y", "e_p_z", "e_p_norm", "e_ex", "e_ey", "e_ez", "e_eps_norm", "alpha"];

fn channel_value(name: &str, r: &TraceRecord) -> f64 {
    match name {
        "e_p_x" => r.e_p.x,
        "e_p_y" => r.e_p.y,
        "e_p_z" => r.e_p.z,
        "e_p_norm" => r.e_p.norm(),
        "e_ex" => r.e_q.eps.x,
        "e_ey" => r.e_q.eps.y,
        "e_ez" => r.e_q.eps.z,
        "e_eps_norm" => r.e_q.eps.norm(),
        "alpha" => r.alpha,
        _ => f64::NAN,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerSummary {
    pub layer: usize,
    pub samples: usize,
    /// Time-RMS of `‖e_p‖` (mm) after the transient.
    pub position_rms: f64,
    /// Time-RMS of `‖e_ε‖` after the transient.
    pub orientation_rms: f64,
    /// Time-RMS of `α` (rad) after the transient.
    pub alpha_rms: f64,
    pub position_max: f64,
    pub alpha_max: f64,
    pub final_position_error: f64,
    pub final_alpha: f64,
    pub sigma_min: f64,
}

impl LayerSummary {
    fn from_records<'a>(layer: usize, recs: impl Iterator<Item = &'a TraceRecord>, transient: f64) -> Self {
        let recs: Vec<&TraceRecord> = recs.collect();
        let steady: Vec<&&TraceRecord> = recs.iter().filter(|r| r.local_t >= transient - 1e-9).collect();
        let rms = |f: &dyn Fn(&TraceRecord) -> f64| {
            if steady.is_empty() {
                0.0
            } else {
                (steady.iter().map(|r| f(r).powi(2)).sum::<f64>() / steady.len() as f64).sqrt()
            }
        };
        let last = recs.last();
        Self {
            layer,
            samples: recs.len(),
            position_rms: rms(&|r| r.e_p.norm()),
            orientation_rms: rms(&|r| r.e_q.eps.norm()),
            alpha_rms: rms(&|r| r.alpha),
            position_max: steady.iter().map(|r| r.e_p.norm()).fold(0.0, f64::max),
            alpha_max: steady.iter().map(|r| r.alpha).fold(0.0, f64::max),
            final_position_error: last.map_or(0.0, |r| r.e_p.norm()),
            final_alpha: last.map_or(0.0, |r| r.alpha),
            sigma_min: recs.iter().map(|r| r.sigma_min).fold(f64::INFINITY, f64::min),
        }
    }
}

/// Per-instant RMS and spread of one error coordinate across layers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RmsBand {
    pub layers: usize,
    /// `√(Σ_k e_k(t)² / N)`
    pub rms: Vec<f64>,
    /// Population standard deviation of `e_k(t)` across layers.
    pub std: Vec<f64>,
}

/// Aggregates equally timed per-layer series; longer series are truncated
/// to the shortest.
pub fn rms_errors(series: &[Vec<f64>]) -> Result<RmsBand> {
    if series.is_empty() {
        return Err(Error::Config("rms over an empty set of layers".into()));
    }
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    let n = series.len() as f64;
    let mut rms = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    for i in 0..len {
        let (mut s, mut s2) = (0.0, 0.0);
        for layer in series {
            s += layer[i];
            s2 += layer[i] * layer[i];
        }
        let mean = s / n;
        rms.push((s2 / n).sqrt());
        std.push((s2 / n - mean * mean).max(0.0).sqrt());
    }
    Ok(RmsBand { layers: series.len(), rms, std })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RmsSummary {
    pub layers: usize,
    /// Pass time of each sample.
    pub t: Vec<f64>,
    pub channels: Vec<(String, RmsBand)>,
}

impl RmsSummary {
    pub fn channel(&self, name: &str) -> Option<&RmsBand> {
        self.channels.iter().find(|(n, _)| n == name).map(|(_, b)| b)
    }
}
