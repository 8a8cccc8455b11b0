//! Experiment files: TOML documents with angles in units of π.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wqed_core::dynamics::{InitialStateSpec, TimeGrid};
use wqed_core::ensemble::LadderSets;
use wqed_core::{
    CumulantMode, DisorderScope, EnsembleConfig, EntropyMode, ObservableSelection, SweepAxis, SystemConfig,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub geometry: Geometry,
    #[serde(default)]
    pub physics: Physics,
    pub excitations: Excitations,
    pub time: Time,
    #[serde(default)]
    pub ensemble: Ensemble,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<Convergence>,
}

fn quarter() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub n_clean: usize,
    pub n_disordered: usize,
    #[serde(default = "quarter")]
    pub xi_clean_over_pi: f64,
    #[serde(default = "quarter")]
    pub xi_disordered_over_pi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    pub directionality: f64,
    pub beta: f64,
    pub w_bar_over_pi: f64,
    pub disorder_scope: DisorderScope,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            directionality: 0.0,
            beta: 1.0,
            w_bar_over_pi: 0.0,
            disorder_scope: DisorderScope::DisorderedZone,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    HalfDicke,
    Dicke,
    Quenched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Excitations {
    pub m: usize,
    pub initial_state: InitialKind,
    /// Optional cross-check of the clean-zone excitation count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quench_clean_sites: Vec<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quench_disordered_sites: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
    /// 41 linear points joined with 1-2-5 decades.
    Standard,
}

fn default_samples() -> usize {
    41
}

fn default_tolerance() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Time {
    pub t_max_gamma: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub spacing: Spacing,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Ensemble {
    pub n_realizations: usize,
    pub master_seed: u64,
    pub convergence_reference: usize,
    pub couple_sweeps: bool,
    pub keep_realizations: bool,
}

impl Default for Ensemble {
    fn default() -> Self {
        Self {
            n_realizations: 2000,
            master_seed: 0,
            convergence_reference: 3000,
            couple_sweeps: true,
            keep_realizations: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableName {
    G2,
    G3,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    pub format: Format,
    /// Populations and per-site entropy are always written.
    pub observables: Vec<ObservableName>,
    pub cumulant_mode: CumulantMode,
    pub entropy_mode: EntropyMode,
    pub dump_realizations: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            directory: None,
            format: Format::Csv,
            observables: vec![ObservableName::G2, ObservableName::Entropy],
            cumulant_mode: CumulantMode::PerRealization,
            entropy_mode: EntropyMode::GroundCompleted,
            dump_realizations: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    NClean,
    /// Values in units of π.
    WBar,
    Directionality,
    Beta,
    NRealizations,
}

impl AxisName {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "n_clean" => Ok(Self::NClean),
            "w_bar" => Ok(Self::WBar),
            "directionality" => Ok(Self::Directionality),
            "beta" => Ok(Self::Beta),
            "n_realizations" => Ok(Self::NRealizations),
            other => Err(CliError::config(
                "sweep.axis",
                format!("unknown axis `{other}`; expected n_clean, w_bar, directionality, beta or n_realizations"),
            )),
        }
    }

    pub fn core(&self) -> SweepAxis {
        match self {
            Self::NClean => SweepAxis::NClean,
            Self::WBar => SweepAxis::WBar,
            Self::Directionality => SweepAxis::Directionality,
            Self::Beta => SweepAxis::Beta,
            Self::NRealizations => SweepAxis::NRealizations,
        }
    }

    /// Converts a configured value to the core's units.
    pub fn to_core_value(&self, v: f64) -> f64 {
        match self {
            Self::WBar => v * PI,
            _ => v,
        }
    }

    /// Name of the subdirectory holding the archive for `v`.
    pub fn directory_name(&self, v: f64) -> String {
        match self {
            Self::WBar => format!("w_bar_over_pi_{v}"),
            _ => format!("{}_{v}", self.core().name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: AxisName,
    pub values: Vec<f64>,
}

fn default_ladder() -> Vec<usize> {
    vec![200, 400, 800, 1200, 2000]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Convergence {
    #[serde(default = "default_ladder")]
    pub ladder: Vec<usize>,
    #[serde(default)]
    pub sets: LadderSets,
}

impl Default for Convergence {
    fn default() -> Self {
        Self {
            ladder: default_ladder(),
            sets: LadderSets::Nested,
        }
    }
}

/// Reads `path`, applies `key=value` overrides and checks every range.
pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("--config", format!("cannot read {}: {e}", path.display())))?;
    parse(&text, overrides)
}

pub fn parse(text: &str, overrides: &[String]) -> Result<ExperimentFile> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::config("toml", e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let file: ExperimentFile = table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::config("toml", e.message().to_string()))?;
    file.check()?;
    Ok(file)
}

/// `section.key=value`; the value is read as a TOML literal, or as a
/// string when it is not one.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(spec, "override must look like section.key=value"))?;
    let key = key.trim();
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(key, "empty key segment"));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(key, format!("`{part}` is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn range(key: &str, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(key, what.to_string()))
    }
}

impl ExperimentFile {
    fn check(&self) -> Result<()> {
        let g = &self.geometry;
        range("geometry.n_clean", g.n_clean >= 1, "must be at least 1")?;
        range("geometry.n_disordered", g.n_disordered >= 1, "must be at least 1")?;
        range(
            "geometry.n_clean",
            g.n_clean + g.n_disordered <= 64,
            "the chain may have at most 64 sites",
        )?;
        for (k, v) in [
            ("geometry.xi_clean_over_pi", g.xi_clean_over_pi),
            ("geometry.xi_disordered_over_pi", g.xi_disordered_over_pi),
        ] {
            range(k, v > 0.0 && v <= 2.0, "must lie in (0, 2]")?;
        }
        let p = &self.physics;
        range("physics.directionality", (-1.0..=1.0).contains(&p.directionality), "must lie in [-1, 1]")?;
        range("physics.beta", p.beta > 0.0 && p.beta <= 1.0, "must lie in (0, 1]")?;
        range("physics.w_bar_over_pi", (0.0..=1.0).contains(&p.w_bar_over_pi), "must lie in [0, 1]")?;
        let e = &self.excitations;
        range("excitations.m", e.m >= 1, "must be at least 1")?;
        range("excitations.m", e.m <= g.n_clean + g.n_disordered, "cannot exceed the number of sites")?;
        let t = &self.time;
        range("time.t_max_gamma", t.t_max_gamma > 0.0 && t.t_max_gamma.is_finite(), "must be positive")?;
        range("time.tolerance", t.tolerance > 0.0 && t.tolerance < 1.0, "must lie in (0, 1)")?;
        range("ensemble.n_realizations", self.ensemble.n_realizations >= 1, "must be at least 1")?;
        range("ensemble.convergence_reference", self.ensemble.convergence_reference >= 1, "must be at least 1")?;
        if self.outputs.observables.contains(&ObservableName::G3) {
            range("outputs.observables", e.m >= 3, "g3 needs at least 3 excitations")?;
        }
        if let Some(s) = &self.sweep {
            range("sweep.values", !s.values.is_empty(), "needs at least one value")?;
        }
        if let Some(c) = &self.convergence {
            range("convergence.ladder", !c.ladder.is_empty() && !c.ladder.contains(&0), "needs positive counts")?;
        }
        let spec = self.initial_state()?;
        if let Some(p) = e.p {
            range("excitations.p", p == spec.p(), "does not match the initial state")?;
        }
        if let Some(q) = e.q {
            range("excitations.q", q == spec.q(e.m), "does not match the initial state")?;
        }
        let system = self.system()?;
        system.validate().map_err(|err| match err {
            wqed_core::Error::Config { field, reason } => CliError::config(field, reason),
            other => CliError::Core(other),
        })
    }

    pub fn initial_state(&self) -> Result<InitialStateSpec> {
        let e = &self.excitations;
        let quench_given = !e.quench_clean_sites.is_empty() || !e.quench_disordered_sites.is_empty();
        match e.initial_state {
            InitialKind::HalfDicke | InitialKind::Dicke if quench_given => Err(CliError::config(
                "excitations.quench_clean_sites",
                "quench sites only apply to the quenched initial state",
            )),
            InitialKind::HalfDicke => Ok(InitialStateSpec::HalfDickeDisordered),
            InitialKind::Dicke => Ok(InitialStateSpec::DickeDisordered),
            InitialKind::Quenched => Ok(InitialStateSpec::Quenched {
                clean_sites: e.quench_clean_sites.clone(),
                disordered_sites: e.quench_disordered_sites.clone(),
            }),
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        let t = &self.time;
        let grid = match t.spacing {
            Spacing::Linear => TimeGrid::linear(t.t_max_gamma, t.samples),
            Spacing::Log => TimeGrid::log(t.t_max_gamma, t.samples),
            Spacing::Standard => TimeGrid::standard(t.t_max_gamma),
        };
        grid.map_err(|e| CliError::config("time", e.to_string()))
    }

    pub fn system(&self) -> Result<SystemConfig> {
        let obs = &self.outputs.observables;
        Ok(SystemConfig {
            n_clean: self.geometry.n_clean,
            n_disordered: self.geometry.n_disordered,
            xi_clean: self.geometry.xi_clean_over_pi * PI,
            xi_disordered: self.geometry.xi_disordered_over_pi * PI,
            directionality: self.physics.directionality,
            beta: self.physics.beta,
            w_bar: self.physics.w_bar_over_pi * PI,
            disorder_scope: self.physics.disorder_scope,
            n_excitations: self.excitations.m,
            initial_state: self.initial_state()?,
            grid: self.grid()?,
            tolerance: self.time.tolerance,
            observables: ObservableSelection {
                correlations: obs.contains(&ObservableName::G2),
                third_order: obs.contains(&ObservableName::G3),
                entropy: obs.contains(&ObservableName::Entropy),
                cumulant_mode: self.outputs.cumulant_mode,
                entropy_mode: self.outputs.entropy_mode,
            },
        })
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        let e = &self.ensemble;
        EnsembleConfig {
            n_realizations: e.n_realizations,
            master_seed: e.master_seed,
            convergence_reference: Some(e.convergence_reference),
            keep_realizations: e.keep_realizations,
            workers: None,
            couple_sweeps: e.couple_sweeps,
            progress: false,
            dump_dir: None,
        }
    }
}
