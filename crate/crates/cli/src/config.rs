//! Experiment configuration: one JSON document per run.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cocycle_lab::admissible::{u_logdist, u_zero, AdmissibleFn};
use cocycle_lab::limits::{Interval, Phi, Psi};
use cocycle_lab::{DualProjPoint, GroupElement, MeasureSpec, ProjPoint};

/// The document as written on disk. Only `seed`, `dimension` and `measure` are mandatory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub dimension: usize,
    pub measure: Vec<AtomConfig>,
    #[serde(default)]
    pub u_choice: UChoice,
    #[serde(default)]
    pub targets: TargetsConfig,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_grid_m")]
    pub grid_m: usize,
    /// Starting direction; defaults to the first basis vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    /// Known Lyapunov exponent; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Known asymptotic variance; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho2: Option<f64>,
    #[serde(default = "default_burnin")]
    pub burnin: usize,
    #[serde(default = "default_xi_list")]
    pub xi_list: Vec<f64>,
    #[serde(default = "default_s_list")]
    pub s_list: Vec<f64>,
    #[serde(default = "default_t_list")]
    pub t_list: Vec<f64>,
    #[serde(default = "default_delta_list")]
    pub delta_list: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    /// Row-major rows.
    pub matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

/// `"zero"` or `{"logdist": [f_0, ..., f_{d-1}]}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UChoice {
    #[default]
    Zero,
    Logdist(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsConfig {
    #[serde(default = "default_names")]
    pub psi: Vec<String>,
    #[serde(default = "default_names")]
    pub phi: Vec<String>,
    /// `[lo, hi]` pairs; `null` stands for an infinite end.
    #[serde(default = "default_intervals")]
    pub intervals: Vec<[Option<f64>; 2]>,
}

impl Default for TargetsConfig {
    fn default() -> Self {
        TargetsConfig { psi: default_names(), phi: default_names(), intervals: default_intervals() }
    }
}

fn default_names() -> Vec<String> {
    vec!["one".into()]
}
fn default_intervals() -> Vec<[Option<f64>; 2]> {
    vec![[None, None]]
}
fn default_n_list() -> Vec<usize> {
    vec![64, 256, 1024]
}
fn default_trials() -> usize {
    10_000
}
fn default_grid_m() -> usize {
    1024
}
fn default_burnin() -> usize {
    200
}
fn default_xi_list() -> Vec<f64> {
    (1..=15).map(|k| 0.02 * k as f64).collect()
}
fn default_s_list() -> Vec<f64> {
    (-6..=6).map(|k| 0.05 * k as f64).collect()
}
fn default_t_list() -> Vec<f64> {
    vec![0.0]
}
fn default_delta_list() -> Vec<f64> {
    vec![0.5, 0.2, 0.1]
}

/// A parse or validation failure, located by field path and, for syntax errors, by line.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), line: None, column: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}, field `{}`: {}", self.field, self.message),
            _ => write!(f, "field `{}`: {}", self.field, self.message),
        }
    }
}

/// Validated, ready-to-run experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub measure: MeasureSpec,
    pub u: AdmissibleFn,
    /// Dual point of the coefficient target, when `u_choice` is `logdist`.
    pub y: Option<DualProjPoint>,
    pub psis: Vec<Psi>,
    pub phis: Vec<Phi>,
    pub intervals: Vec<Interval>,
    pub x0: ProjPoint,
    /// Hex SHA-256 of the canonical config, excluding `output_dir`.
    pub hash: String,
}

pub fn parse(text: &str) -> Result<Experiment, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ConfigError {
            field,
            line: Some(inner.line()),
            column: Some(inner.column()),
            message: strip_position(&inner.to_string()),
        }
    })?;
    validate(config)
}

/// serde_json appends " at line L column C", which is reported separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn validate(config: ExperimentConfig) -> Result<Experiment, ConfigError> {
    let d = config.dimension;
    if d < 2 {
        return Err(ConfigError::field("dimension", format!("must be at least 2, got {d}")));
    }
    if config.measure.is_empty() {
        return Err(ConfigError::field("measure", "needs at least one atom"));
    }
    let weighted = config.measure.iter().filter(|a| a.weight.is_some()).count();
    if weighted != 0 && weighted != config.measure.len() {
        return Err(ConfigError::field("measure", "give a weight for every atom or for none"));
    }
    let mut atoms = Vec::with_capacity(config.measure.len());
    for (i, a) in config.measure.iter().enumerate() {
        let field = format!("measure[{i}].matrix");
        if a.matrix.len() != d || a.matrix.iter().any(|r| r.len() != d) {
            return Err(ConfigError::field(field, format!("expected a {d}x{d} row-major array")));
        }
        let g = GroupElement::from_rows(&a.matrix).map_err(|e| ConfigError::field(field, e.to_string()))?;
        let w = a.weight.unwrap_or(1.0 / config.measure.len() as f64);
        atoms.push((g, w));
    }
    let measure = MeasureSpec::new(atoms).map_err(|e| ConfigError::field("measure", e.to_string()))?;

    let (u, y) = match &config.u_choice {
        UChoice::Zero => (u_zero(), None),
        UChoice::Logdist(f) => {
            if f.len() != d {
                return Err(ConfigError::field("u_choice.logdist", format!("expected {d} coordinates")));
            }
            let y = DualProjPoint::new(f).map_err(|e| ConfigError::field("u_choice.logdist", e.to_string()))?;
            (u_logdist(&y), Some(y))
        }
    };

    let psis = config
        .targets
        .psi
        .iter()
        .enumerate()
        .map(|(i, n)| {
            Psi::from_name(n)
                .ok_or_else(|| ConfigError::field(format!("targets.psi[{i}]"), format!("unknown psi `{n}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let phis = config
        .targets
        .phi
        .iter()
        .enumerate()
        .map(|(i, n)| {
            Phi::from_name(n)
                .ok_or_else(|| ConfigError::field(format!("targets.phi[{i}]"), format!("unknown phi `{n}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut intervals = Vec::with_capacity(config.targets.intervals.len());
    for (i, [lo, hi]) in config.targets.intervals.iter().enumerate() {
        let j = Interval { lo: lo.unwrap_or(f64::NEG_INFINITY), hi: hi.unwrap_or(f64::INFINITY) };
        if !(j.lo < j.hi) {
            return Err(ConfigError::field(format!("targets.intervals[{i}]"), "need lo < hi"));
        }
        intervals.push(j);
    }
    for (name, list) in
        [("targets.psi", psis.len()), ("targets.phi", phis.len()), ("targets.intervals", intervals.len())]
    {
        if list == 0 {
            return Err(ConfigError::field(name, "must not be empty"));
        }
    }

    if config.n_list.is_empty() {
        return Err(ConfigError::field("n_list", "must not be empty"));
    }
    if config.trials == 0 {
        return Err(ConfigError::field("trials", "must be positive"));
    }
    if config.grid_m < 64 {
        return Err(ConfigError::field("grid_m", "must be at least 64"));
    }
    if let Some(g) = config.rho2 {
        if !(g > 0.0) {
            return Err(ConfigError::field("rho2", "must be positive"));
        }
    }
    let x0 = match &config.start {
        None => ProjPoint::basis(d, 0),
        Some(v) if v.len() != d => return Err(ConfigError::field("start", format!("expected {d} coordinates"))),
        Some(v) => ProjPoint::new(v).map_err(|e| ConfigError::field("start", e.to_string()))?,
    };

    let mut canonical = config.clone();
    canonical.output_dir = None;
    let bytes = serde_json::to_vec(&canonical).expect("config serialises");
    let hash = format!("{:x}", Sha256::digest(&bytes));

    Ok(Experiment { config, measure, u, y, psis, phis, intervals, x0, hash })
}
