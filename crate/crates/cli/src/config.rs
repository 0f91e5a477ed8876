//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sqzengine_core::engine::{EngineConfig, EngineKind, InitialState};
use sqzengine_core::otto::OttoTemplate;
use sqzengine_core::protocol::{CavityGeometry, Schedule, StrokeSpec};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Expand,
    Cycle,
    Sweep,
    Nstar,
    Validate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Expand => "expand",
            Experiment::Cycle => "cycle",
            Experiment::Sweep => "sweep",
            Experiment::Nstar => "nstar",
            Experiment::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Overridden by the positional experiment on the command line.
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub expand: Option<ExpandConfig>,
    #[serde(default)]
    pub cycle: Option<CycleConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub nstar: Option<NstarConfig>,
    #[serde(default)]
    pub validate: Option<ValidateConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// File stem; defaults to the experiment name.
    #[serde(default)]
    pub stem: Option<String>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir(), stem: None }
    }
}

/// Squeezed thermal starting state; all zero is the vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub nbar: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub phi: f64,
}

impl InitialConfig {
    pub fn state(&self) -> InitialState {
        InitialState::SqueezedThermal { nbar: self.nbar, r: self.r, phi: self.phi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandConfig {
    pub geometry: CavityGeometry,
    #[serde(default)]
    pub initial: InitialConfig,
    pub strokes: Vec<StrokeSpec>,
}

impl ExpandConfig {
    pub fn schedule(&self) -> Result<Schedule, CliError> {
        Ok(Schedule::new(self.geometry, self.strokes.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleConfig {
    pub template: OttoTemplate,
    pub r2: f64,
    pub nbar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub template: OttoTemplate,
    pub r2_values: Vec<f64>,
    pub nbar_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NstarConfig {
    pub template: OttoTemplate,
    pub r2_values: Vec<f64>,
    pub bracket: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub scenarios: Vec<ExpandConfig>,
    /// Largest accepted trajectory-relative error between the engines.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

fn default_rel_tol() -> f64 {
    1e-5
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub out: Option<PathBuf>,
    pub engine: Option<EngineKind>,
    pub dt: Option<f64>,
}

impl RunConfig {
    /// Parses a config file, or the `resolved_config` of a sidecar.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let value = match value.get("resolved_config") {
            Some(inner) => inner.clone(),
            None => value,
        };
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(x) = o.experiment {
            self.experiment = Some(x);
        }
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        if let Some(e) = o.engine {
            self.engine.engine = e;
        }
        if let Some(dt) = o.dt {
            self.engine.dt = dt;
        }
    }

    pub fn stem(&self) -> String {
        match (&self.output.stem, self.experiment) {
            (Some(s), _) => s.clone(),
            (None, Some(e)) => e.name().to_string(),
            (None, None) => "run".to_string(),
        }
    }

    /// Checks everything that can be checked without running physics.
    pub fn validate(&self) -> Result<Experiment, CliError> {
        let experiment = self
            .experiment
            .ok_or_else(|| CliError::Config("no experiment given".into()))?;
        self.engine.validate()?;
        if let Some(stem) = &self.output.stem {
            if stem.is_empty() || stem.contains(['/', '\\']) {
                return Err(CliError::Config(format!("bad output stem {stem:?}")));
            }
        }
        let missing = |what: &str| CliError::Config(format!("experiment needs a \"{what}\" section"));
        match experiment {
            Experiment::Expand => {
                let e = self.expand.as_ref().ok_or_else(|| missing("expand"))?;
                check_initial(&e.initial)?;
                e.schedule()?;
            }
            Experiment::Cycle => {
                let c = self.cycle.as_ref().ok_or_else(|| missing("cycle"))?;
                check_template(&c.template)?;
                c.template.cycle(c.r2, c.nbar)?;
            }
            Experiment::Sweep => {
                let s = self.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
                check_template(&s.template)?;
                check_grid("r2_values", &s.r2_values)?;
                check_grid("nbar_values", &s.nbar_values)?;
                for &r2 in &s.r2_values {
                    for &nbar in &s.nbar_values {
                        s.template.cycle(r2, nbar)?;
                    }
                }
            }
            Experiment::Nstar => {
                let n = self.nstar.as_ref().ok_or_else(|| missing("nstar"))?;
                check_template(&n.template)?;
                check_grid("r2_values", &n.r2_values)?;
                let [lo, hi] = n.bracket;
                if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                    return Err(CliError::Config(format!("bad bracket [{lo}, {hi}]")));
                }
                for &r2 in &n.r2_values {
                    n.template.cycle(r2, lo)?;
                    n.template.cycle(r2, hi)?;
                }
            }
            Experiment::Validate => {
                let v = self.validate.as_ref().ok_or_else(|| missing("validate"))?;
                if v.scenarios.is_empty() {
                    return Err(CliError::Config("validate needs at least one scenario".into()));
                }
                if !(v.rel_tol > 0.0 && v.rel_tol.is_finite()) {
                    return Err(CliError::Config("rel_tol must be positive".into()));
                }
                for s in &v.scenarios {
                    check_initial(&s.initial)?;
                    s.schedule()?;
                }
            }
        }
        Ok(experiment)
    }
}

fn check_initial(i: &InitialConfig) -> Result<(), CliError> {
    let ok = i.nbar >= 0.0 && i.nbar.is_finite() && i.r >= 0.0 && i.r.is_finite() && i.phi.is_finite();
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("bad initial state {i:?}")))
    }
}

fn check_template(t: &OttoTemplate) -> Result<(), CliError> {
    if t.max_cycles == 0 {
        return Err(CliError::Config("max_cycles must be at least 1".into()));
    }
    if !(t.tol >= 0.0) {
        return Err(CliError::Config("tol must be non-negative".into()));
    }
    t.cycle(t.r1, 0.0)?;
    Ok(())
}

fn check_grid(name: &str, values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("{name} must be a non-empty list of finite numbers")));
    }
    Ok(())
}

/// Schema summary shown by `--help`.
pub const SCHEMA_HELP: &str = r#"CONFIG SCHEMA (JSON, unknown keys rejected; full reference in docs/CONFIG.md)
  experiment   "expand" | "cycle" | "sweep" | "nstar" | "validate" (optional; the positional wins)
  engine       { engine: "moments"|"fock", dt: 0.01, fock_dim: null|int,
                 bath_frame: "literal"|"corotating", phase_convention: "omega_t"|"integral_omega",
                 positivity_checks: false, sample_every: 0 }
  output       { dir: "out", stem: null }
  expand       { geometry: { l0, omega0, section: 1 }, initial: { nbar: 0, r: 0, phi: 0 },
                 strokes: [ { kind: "unitary"|"dissipative", duration, speed: 0,
                              bath: null | { nbar, gamma, r, phi: 0,
                                             occupation: { kind: "fixed" } | { kind: "thermal", omega_ref } },
                              measure_after: false } ] }
  cycle        { template: T, r2, nbar }
  sweep        { template: T, r2_values: [..], nbar_values: [..] }
  nstar        { template: T, r2_values: [..], bracket: [lo, hi] }
  validate     { scenarios: [ <expand section>, .. ], rel_tol: 1e-5 }
  T (cycle template) = { l0, omega0, section: 1, tau, speed, gamma, r1, phi: 0,
                         mode: "limit"|"first", max_cycles: 50, tol: 1e-8 }
A sidecar JSON written next to any CSV is also accepted as --config."#;
