//! Scenario files and path ingestion.

use std::path::{Path, PathBuf};

use brp_core::fixtures::{ito_corrections, uniform_times, Generator};
use brp_core::one_form::{MonomialTerm, OneFormConfig};
use brp_core::rough_path::Perturbation;
use brp_core::{BranchedRoughPath, IntegrationOptions, PolynomialOneForm};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub path: PathSource,
    pub p: f64,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub one_form: Option<OneFormSection>,
    #[serde(default)]
    pub lift: LiftKind,
    /// `[s, t]` as sample times; the whole grid when absent.
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    /// Number of dyadic refinement levels.
    #[serde(default)]
    pub refine: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub integrate: IntegrateOptions,
    #[serde(default)]
    pub verify: VerifyOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSource {
    /// CSV file with header `t,x1,…,xd`, relative to the config file.
    Csv(PathBuf),
    Generator {
        #[serde(flatten)]
        generator: Generator,
        steps: usize,
        #[serde(default = "one")]
        horizon: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// One-form terms; `components[(i−1)·e + k]` holds output `k` of `f_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneFormSection {
    pub d: usize,
    pub e: usize,
    pub components: Vec<Vec<MonomialTerm>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LiftKind {
    #[default]
    Canonical,
    /// Corrections on `[•_i]_j`: explicit per-sample values, or
    /// `c_{ii}(t) = −scale·(t − t₀)/2` on every diagonal tree.
    Ito {
        #[serde(default)]
        scale: Option<f64>,
        #[serde(default)]
        perturbations: Vec<PerturbationEntry>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationEntry {
    pub i: u32,
    pub j: u32,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateOptions {
    /// Interval lengths in grid steps for the local error table.
    #[serde(default)]
    pub error_scales: Option<Vec<usize>>,
    #[serde(default = "default_max_intervals")]
    pub max_intervals: usize,
    /// Points used for p-variation estimates.
    #[serde(default = "default_pvar_points")]
    pub pvar_points: usize,
}

fn default_max_intervals() -> usize {
    8
}

fn default_pvar_points() -> usize {
    257
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions { error_scales: None, max_intervals: default_max_intervals(), pvar_points: default_pvar_points() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    #[serde(default = "default_instances")]
    pub instances: usize,
    /// Alphabet size and degree for the algebra suite.
    #[serde(default = "two")]
    pub d: usize,
    #[serde(default = "three")]
    pub degree: usize,
    #[serde(default = "default_max_gap")]
    pub max_gap: f64,
}

fn default_instances() -> usize {
    100
}

fn two() -> usize {
    2
}

fn three() -> usize {
    3
}

fn default_max_gap() -> f64 {
    1e-4
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { instances: default_instances(), d: 2, degree: 3, max_gap: default_max_gap() }
    }
}

/// A config together with the directory its relative paths refer to.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: ScenarioConfig,
    pub base: PathBuf,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    let config: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let loaded = Loaded { config, base };
    loaded.validate()?;
    Ok(loaded)
}

impl Loaded {
    pub fn from_config(config: ScenarioConfig, base: PathBuf) -> Result<Loaded, CliError> {
        let loaded = Loaded { config, base };
        loaded.validate()?;
        Ok(loaded)
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        if c.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                c.schema_version
            )));
        }
        if !(c.p >= 1.0) || c.p.floor() > 3.0 {
            return Err(CliError::Input(format!("need 1 <= p with [p] <= 3, got p = {}", c.p)));
        }
        if let Some(g) = c.gamma {
            if !(g > c.p) {
                return Err(CliError::Input(format!("need gamma > p, got gamma = {g}, p = {}", c.p)));
            }
        }
        Ok(())
    }

    /// Sample times and points, with `seed` overriding a generator seed.
    pub fn samples(&self, seed: Option<u64>) -> Result<(Vec<f64>, Vec<Vec<f64>>), CliError> {
        match &self.config.path {
            PathSource::Csv(file) => read_csv(&self.base.join(file)),
            PathSource::Generator { generator, steps, horizon } => {
                if *steps == 0 || !(*horizon > 0.0) {
                    return Err(CliError::Input("generator needs steps >= 1 and horizon > 0".into()));
                }
                let mut generator = generator.clone();
                if let (Generator::SmoothRandom { seed: s, .. }, Some(new)) = (&mut generator, seed.or(self.config.seed)) {
                    *s = new;
                }
                let times = uniform_times(*steps, *horizon);
                let pts = generator.sample(&times)?;
                Ok((times, pts))
            }
        }
    }

    pub fn path(&self, seed: Option<u64>) -> Result<BranchedRoughPath, CliError> {
        let (times, pts) = self.samples(seed)?;
        let p = self.config.p;
        Ok(match &self.config.lift {
            LiftKind::Canonical => BranchedRoughPath::canonical_lift(&times, &pts, p)?,
            LiftKind::Ito { scale, perturbations } => {
                let d = pts.first().map_or(0, Vec::len);
                let mut all: Vec<Perturbation> = scale.map(|s| ito_corrections(d, &times, s)).unwrap_or_default();
                all.extend(
                    perturbations.iter().map(|q| Perturbation { i: q.i, j: q.j, values: q.values.clone() }),
                );
                BranchedRoughPath::ito_like_lift(&times, &pts, p, &all)?
            }
        })
    }

    pub fn one_form(&self) -> Result<PolynomialOneForm, CliError> {
        let section = self
            .config
            .one_form
            .as_ref()
            .ok_or_else(|| CliError::Input("config has no one_form".into()))?;
        let gamma = self.config.gamma.ok_or_else(|| CliError::Input("config has no gamma".into()))?;
        let cfg = OneFormConfig { d: section.d, e: section.e, gamma, components: section.components.clone() };
        Ok(PolynomialOneForm::from_config(&cfg)?)
    }

    pub fn options(&self, refine: Option<usize>) -> IntegrationOptions {
        let mut opts = IntegrationOptions::default();
        if let Some(levels) = refine.or(self.config.refine) {
            opts.max_levels = levels.max(1);
        }
        opts
    }
}

/// Reads `t,x1,…,xd` samples; errors name the offending line.
pub fn read_csv(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: bad header: {e}", path.display())))?
        .clone();
    let d = headers.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("t".to_string()).chain((1..=d).map(|i| format!("x{i}"))).collect();
    if d == 0 || headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(CliError::Input(format!(
            "{}: header must be {}, found {}",
            path.display(),
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let row = row + 1;
        let record = record.map_err(|e| CliError::Input(format!("{}: row {row}: {e}", path.display())))?;
        if record.len() != d + 1 {
            return Err(CliError::Input(format!(
                "{}: row {row}: expected {} fields, found {}",
                path.display(),
                d + 1,
                record.len()
            )));
        }
        let values: Vec<f64> = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::Input(format!("{}: row {row}: field {} is not a number: {field:?}", path.display(), col + 1)))
            })
            .collect::<Result<_, _>>()?;
        times.push(values[0]);
        points.push(values[1..].to_vec());
    }
    if times.len() < 2 {
        return Err(CliError::Input(format!("{}: need at least two rows", path.display())));
    }
    if let Some(row) = times.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(CliError::Input(format!("{}: row {}: times must increase strictly", path.display(), row + 2)));
    }
    Ok((times, points))
}
