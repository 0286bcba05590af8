//! Scenario runner behind the `waam-sim` binary: configuration loading,
//! output files and formulation comparison.

mod compare;
mod plot;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain::{default_chain, ChainDescription};
use crate::chain_file::load_chain;
use crate::controller::ControlGains;
use crate::sim::{EtaModel, Formulation, SimConfig};
use crate::singularity::DlsConfig;
use crate::trajectory::{DepositionPlan, Scenario};

pub use compare::{compare_formulations, formulation_deviation, ComparisonReport, FormulationDeviation};
pub use plot::{LinePlot, Series};
pub use run::{run, RunReport, RunSummary};

/// Environment variable naming the config file used when `--config` is
/// not given.
pub const CONFIG_ENV: &str = "WAAM_SIM_CONFIG";

#[derive(Clone, Debug, PartialEq)]
pub enum HarnessError {
    Config(String),
    Divergence(String),
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Divergence(_) => 3,
            HarnessError::Io(_) => 4,
        }
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(m) => write!(f, "config error: {m}"),
            HarnessError::Divergence(m) => write!(f, "aborted: {m}"),
            HarnessError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<crate::Error> for HarnessError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Divergence { .. } | crate::Error::NonFinite(_) => HarnessError::Divergence(e.to_string()),
            crate::Error::Io(_) => HarnessError::Io(e.to_string()),
            _ => HarnessError::Config(e.to_string()),
        }
    }
}

pub(crate) fn io_error(path: &Path, e: impl fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulationChoice {
    #[default]
    Augmented,
    Constrained,
    Both,
}

impl FormulationChoice {
    pub fn formulations(self) -> &'static [Formulation] {
        match self {
            FormulationChoice::Augmented => &[Formulation::Augmented],
            FormulationChoice::Constrained => &[Formulation::Constrained],
            FormulationChoice::Both => &[Formulation::Augmented, Formulation::Constrained],
        }
    }
}

impl std::str::FromStr for FormulationChoice {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s {
            "augmented" => Ok(FormulationChoice::Augmented),
            "constrained" => Ok(FormulationChoice::Constrained),
            "both" => Ok(FormulationChoice::Both),
            _ => Err(HarnessError::Config(format!(
                "unknown formulation '{s}' (expected augmented, constrained or both)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOptions {
    /// Write every n-th tick to the trace file.
    pub trace_every: usize,
    pub plots: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self { trace_every: 1, plots: true }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawHarness {
    chain: Option<PathBuf>,
    scenario: Option<Scenario>,
    out: Option<PathBuf>,
    formulation: Option<FormulationChoice>,
    transient: Option<f64>,
    plan: Option<toml::Table>,
    gains: Option<ControlGains>,
    dls: Option<DlsConfig>,
    sim: Option<SimConfig>,
    output: Option<OutputOptions>,
}

/// Everything one harness invocation needs.
#[derive(Clone, Debug, PartialEq)]
pub struct HarnessConfig {
    /// Chain description file; the built-in cell when absent.
    pub chain: Option<PathBuf>,
    pub scenario: Scenario,
    /// Keys laid over the scenario preset.
    pub plan_overrides: toml::Table,
    pub gains: ControlGains,
    pub dls: DlsConfig,
    pub sim: SimConfig,
    pub out: PathBuf,
    pub formulation: FormulationChoice,
    /// Seconds at the start of each pass excluded from layer statistics.
    pub transient: f64,
    pub output: OutputOptions,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self::for_scenario(Scenario::InclinedWall)
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub scenario: Option<Scenario>,
    pub layers: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub eta: Option<EtaModel>,
    pub formulation: Option<FormulationChoice>,
}

impl HarnessConfig {
    pub fn for_scenario(scenario: Scenario) -> Self {
        Self {
            chain: None,
            scenario,
            plan_overrides: toml::Table::new(),
            gains: ControlGains::default(),
            dls: DlsConfig::default(),
            sim: SimConfig::default(),
            out: PathBuf::from("out").join(scenario.name()),
            formulation: FormulationChoice::default(),
            transient: 0.5,
            output: OutputOptions::default(),
        }
    }

    /// Parses config text. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, HarnessError> {
        let raw: RawHarness = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let scenario = raw.scenario.unwrap_or(Scenario::InclinedWall);
        let mut cfg = Self::for_scenario(scenario);
        cfg.chain = raw.chain.map(|p| base.join(p));
        if let Some(out) = raw.out {
            cfg.out = base.join(out);
        }
        cfg.formulation = raw.formulation.unwrap_or_default();
        cfg.transient = raw.transient.unwrap_or(cfg.transient);
        cfg.plan_overrides = raw.plan.unwrap_or_default();
        cfg.gains = raw.gains.unwrap_or_default();
        cfg.dls = raw.dls.unwrap_or_default();
        cfg.sim = raw.sim.unwrap_or_default();
        cfg.output = raw.output.unwrap_or_default();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.scenario {
            self.scenario = s;
        }
        if let Some(n) = o.layers {
            self.plan_overrides.insert("layers".into(), toml::Value::Integer(n as i64));
        }
        if let Some(seed) = o.seed {
            self.sim.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(eta) = o.eta {
            self.sim.eta = eta;
        }
        if let Some(f) = o.formulation {
            self.formulation = f;
        }
    }

    /// The scenario preset with the plan overrides applied.
    pub fn plan(&self) -> Result<DepositionPlan, HarnessError> {
        let preset = DepositionPlan::preset(self.scenario);
        let mut table = toml::Table::try_from(&preset).map_err(|e| HarnessError::Config(e.to_string()))?;
        for (k, v) in &self.plan_overrides {
            table.insert(k.clone(), v.clone());
        }
        let plan: DepositionPlan = table
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(format!("[plan]: {}", e.message())))?;
        if plan.scenario != self.scenario {
            return Err(HarnessError::Config(format!(
                "[plan] scenario '{}' disagrees with scenario '{}'",
                plan.scenario.name(),
                self.scenario.name()
            )));
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn chain(&self) -> Result<ChainDescription, HarnessError> {
        match &self.chain {
            None => Ok(default_chain()),
            Some(p) => load_chain(p).map_err(|e| HarnessError::Config(e.to_string())),
        }
    }

    /// Checks every parameter before anything runs.
    pub fn validate(&self) -> Result<(ChainDescription, DepositionPlan), HarnessError> {
        let chain = self.chain()?;
        let plan = self.plan()?;
        self.gains.validate()?;
        self.dls.validate()?;
        self.sim.validate()?;
        if !(self.transient >= 0.0) {
            return Err(HarnessError::Config("transient must be >= 0".into()));
        }
        if self.output.trace_every == 0 {
            return Err(HarnessError::Config("output.trace_every must be >= 1".into()));
        }
        Ok((chain, plan))
    }
}
