//! Layer sequencing on the control-rate tick grid.

use std::io::Write;

use serde::Serialize;

use super::DepositionPlan;
use crate::controller::TaskReference;
use crate::error::{Error, Result};
use crate::numfmt::sig9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Arc off, reference held at the next layer's start.
    Dwell,
    Deposit,
    /// After the last layer, reference held at the end of the final pass.
    Settle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub phase: Phase,
    pub layer: usize,
    pub start_tick: usize,
    pub ticks: usize,
}

/// The reference in force at one tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TickReference {
    pub t: f64,
    pub phase: Phase,
    pub layer: usize,
    /// Time since the start of the layer pass (0 while dwelling).
    pub local_t: f64,
    pub reference: TaskReference,
}

/// Dwell and deposition segments laid out on `t_i = i·dt`.
///
/// A pass of duration `T` spans `floor(T/dt)` ticks, so every sample of a
/// pass sits exactly on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub dt: f64,
    pub segments: Vec<Segment>,
    pub total_ticks: usize,
}

pub(crate) fn pass_ticks(duration: f64, dt: f64) -> usize {
    ((duration / dt) + 1e-9).floor().max(1.0) as usize
}

impl Schedule {
    pub fn new(plan: &DepositionPlan, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("dt must be > 0, got {dt}")));
        }
        plan.validate()?;
        let n = plan.layer_count();
        let mut segments = Vec::with_capacity(2 * n);
        let mut tick = 0;
        if n > 0 {
            let pass = pass_ticks(plan.layer_duration()?, dt);
            let dwell = (plan.dwell / dt).round() as usize;
            for layer in 1..=n {
                if layer > 1 && dwell > 0 {
                    segments.push(Segment { phase: Phase::Dwell, layer, start_tick: tick, ticks: dwell });
                    tick += dwell;
                }
                segments.push(Segment { phase: Phase::Deposit, layer, start_tick: tick, ticks: pass });
                tick += pass;
            }
            if dwell > 0 {
                segments.push(Segment { phase: Phase::Settle, layer: n, start_tick: tick + 1, ticks: dwell });
                tick += dwell;
            }
        }
        Ok(Self { dt, segments, total_ticks: tick })
    }

    pub fn duration(&self) -> f64 {
        self.total_ticks as f64 * self.dt
    }

    pub fn layer_count(&self) -> usize {
        self.segments.iter().filter(|s| s.phase == Phase::Deposit).count()
    }

    pub fn segment_at(&self, tick: usize) -> Option<(Segment, usize)> {
        if self.segments.is_empty() || tick > self.total_ticks {
            return None;
        }
        let idx = self.segments.partition_point(|s| s.start_tick <= tick).saturating_sub(1);
        let seg = self.segments[idx];
        Some((seg, tick - seg.start_tick))
    }

    /// Reference for tick `tick`; `None` for an empty plan.
    pub fn at_tick(&self, plan: &DepositionPlan, tick: usize) -> Result<Option<TickReference>> {
        let Some((seg, j)) = self.segment_at(tick) else {
            return Ok(None);
        };
        let t = tick as f64 * self.dt;
        Ok(Some(match seg.phase {
            Phase::Dwell => TickReference {
                t,
                phase: Phase::Dwell,
                layer: seg.layer,
                local_t: 0.0,
                reference: plan.reference(seg.layer, 0.0)?.frozen(),
            },
            Phase::Settle => {
                let pass = pass_ticks(plan.layer_duration()?, self.dt);
                TickReference {
                    t,
                    phase: Phase::Settle,
                    layer: seg.layer,
                    local_t: 0.0,
                    reference: plan.reference(seg.layer, pass as f64 * self.dt)?.frozen(),
                }
            }
            Phase::Deposit => {
                let local_t = j as f64 * self.dt;
                TickReference {
                    t,
                    phase: Phase::Deposit,
                    layer: seg.layer,
                    local_t,
                    reference: plan.reference(seg.layer, local_t)?,
                }
            }
        }))
    }
}

/// Samples of one layer pass at the control rate.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerReferenceStream {
    pub layer: usize,
    pub samples: Vec<(f64, TaskReference)>,
}

impl LayerReferenceStream {
    pub fn generate(plan: &DepositionPlan, layer: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {dt}")));
        }
        let n = pass_ticks(plan.layer_duration()?, dt);
        let samples = (0..=n)
            .map(|j| {
                let t = j as f64 * dt;
                plan.reference(layer, t).map(|r| (t, r))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layer, samples })
    }
}

pub const REFERENCE_COLUMNS: [&str; 18] = [
    "layer", "t", "p_d_x", "p_d_y", "p_d_z", "q_d_eta", "q_d_ex", "q_d_ey", "q_d_ez", "pdot_d_x", "pdot_d_y", "pdot_d_z",
    "omega_d_x", "omega_d_y", "omega_d_z", "z_d_x", "z_d_y", "z_d_z",
];

/// Writes every executed layer's pass as CSV, one row per sample.
pub fn write_reference_csv<W: Write>(plan: &DepositionPlan, dt: f64, out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(format!("writing reference file: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REFERENCE_COLUMNS).map_err(io)?;
    for layer in 1..=plan.layer_count() {
        let stream = LayerReferenceStream::generate(plan, layer, dt)?;
        for (t, r) in &stream.samples {
            let mut row = vec![layer.to_string(), sig9(*t)];
            let q = r.q_d.to_array();
            let nums = r
                .p_d
                .iter()
                .chain(q.iter())
                .chain(r.pdot_d.iter())
                .chain(r.omega_d.iter())
                .chain(r.z_d.iter());
            row.extend(nums.map(|v| sig9(*v)));
            w.write_record(&row).map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Io(format!("writing reference file: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Scenario;

    #[test]
    fn inclined_wall_schedule() {
        let plan = DepositionPlan { layers: Some(3), ..DepositionPlan::preset(Scenario::InclinedWall) };
        let s = Schedule::new(&plan, 1.0 / 60.0).unwrap();
        // 20.1 s passes, 3 s dwells, 3 s settle
        assert_eq!(s.total_ticks, 3 * 1206 + 3 * 180);
        assert_eq!(s.layer_count(), 3);
        let first = s.at_tick(&plan, 0).unwrap().unwrap();
        assert_eq!((first.layer, first.phase), (1, Phase::Deposit));
        let dwell = s.at_tick(&plan, 1206).unwrap().unwrap();
        assert_eq!((dwell.layer, dwell.phase), (2, Phase::Dwell));
        assert_eq!(dwell.reference.pdot_d.norm(), 0.0);
        let end = s.at_tick(&plan, s.total_ticks - 180).unwrap().unwrap();
        assert_eq!((end.layer, end.phase), (3, Phase::Deposit));
        assert!((end.local_t - 20.1).abs() < 1e-9);
        let last = s.at_tick(&plan, s.total_ticks).unwrap().unwrap();
        assert_eq!((last.layer, last.phase), (3, Phase::Settle));
        assert_eq!(last.reference.p_d, end.reference.p_d);
        assert_eq!(last.reference.pdot_d.norm(), 0.0);
        assert!(s.at_tick(&plan, s.total_ticks + 1).unwrap().is_none());
    }

    #[test]
    fn empty_plan() {
        let plan = DepositionPlan { layers: Some(0), ..DepositionPlan::preset(Scenario::Cylinder) };
        let s = Schedule::new(&plan, 1.0 / 60.0).unwrap();
        assert_eq!(s.total_ticks, 0);
        assert!(s.at_tick(&plan, 0).unwrap().is_none());
    }

    #[test]
    fn stream_is_uniform() {
        let plan = DepositionPlan::preset(Scenario::Cylinder);
        let dt = 1.0 / 60.0;
        let st = LayerReferenceStream::generate(&plan, 3, dt).unwrap();
        for w in st.samples.windows(2) {
            assert!((w[1].0 - w[0].0 - dt).abs() < 1e-12);
        }
        assert!(st.samples.iter().all(|(_, r)| (r.q_d.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn reference_csv_header_and_rows() {
        let plan = DepositionPlan { layers: Some(1), ..DepositionPlan::preset(Scenario::SingularTransit) };
        let mut buf = Vec::new();
        write_reference_csv(&plan, 0.5, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap().split(',').count(), 18);
        assert_eq!(lines.count(), 41);
    }
}
