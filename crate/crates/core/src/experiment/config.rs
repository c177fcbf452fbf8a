use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    load_csv, split, synth_biobjective_regression, synth_fairness, synth_multitask_classification,
    Dataset, FairnessSynth, MultitaskSynth, RegressionSynth, TabularSchema,
};
use crate::nn::{AdamParams, LrSchedule};
use crate::objectives::{LossKind, ObjectiveSpec};
use crate::preference::DirichletParams;
use crate::train::{CosmosConfig, TrainConfig};
use crate::{Error, Result};

/// Environment variable that roots relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "COSMOS_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    SynthRegression,
    SynthFairness,
    SynthMultitask,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cosmos,
    FixedRaySweep,
    SingleTask,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Cosmos => "cosmos",
            Method::FixedRaySweep => "fixed_ray_sweep",
            Method::SingleTask => "single_task",
        })
    }
}

/// `[dataset]`: generator settings or CSV location. Unset generator fields
/// keep the generator's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disparity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    /// Seed of the generator; independent of the run seeds.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_fractions")]
    pub fractions: [f64; 3],
    #[serde(default)]
    pub split_seed: u64,
}

fn default_fractions() -> [f64; 3] {
    [0.7, 0.1, 0.2]
}

impl DatasetConfig {
    pub fn new(kind: DatasetKind) -> Self {
        DatasetConfig {
            kind,
            n: None,
            dim: None,
            gap: None,
            disparity: None,
            signal: None,
            classes: None,
            noise: None,
            path: None,
            schema: None,
            seed: 0,
            fractions: default_fractions(),
            split_seed: 0,
        }
    }

    /// Generates or reads the data and assigns the train/val/test splits.
    pub fn load(&self) -> Result<Dataset> {
        let raw = match self.kind {
            DatasetKind::SynthRegression => {
                let mut c = RegressionSynth {
                    seed: self.seed,
                    ..RegressionSynth::default()
                };
                if let Some(n) = self.n {
                    c.n = n;
                }
                if let Some(d) = self.dim {
                    c.dim = d;
                }
                if let Some(g) = self.gap {
                    c.gap = g;
                }
                synth_biobjective_regression(&c)?
            }
            DatasetKind::SynthFairness => {
                let mut c = FairnessSynth {
                    seed: self.seed,
                    ..FairnessSynth::default()
                };
                if let Some(n) = self.n {
                    c.n = n;
                }
                if let Some(d) = self.dim {
                    c.dim = d;
                }
                if let Some(v) = self.disparity {
                    c.disparity = v;
                }
                if let Some(v) = self.signal {
                    c.signal = v;
                }
                synth_fairness(&c)?
            }
            DatasetKind::SynthMultitask => {
                let mut c = MultitaskSynth {
                    seed: self.seed,
                    ..MultitaskSynth::default()
                };
                if let Some(n) = self.n {
                    c.n = n;
                }
                if let Some(d) = self.dim {
                    c.dim = d;
                }
                if let Some(k) = &self.classes {
                    c.classes = k.clone();
                }
                if let Some(v) = self.noise {
                    c.noise = v;
                }
                synth_multitask_classification(&c)?
            }
            DatasetKind::Csv => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("csv dataset needs `path`".into()))?;
                let schema = self
                    .schema
                    .as_ref()
                    .ok_or_else(|| Error::Config("csv dataset needs `schema`".into()))?;
                let schema = TabularSchema::from_file(schema)?;
                return load_csv(path, &schema, self.fractions, self.split_seed);
            }
        };
        split(raw, self.fractions, self.split_seed)
    }

    /// Objectives used when the config lists none.
    pub fn default_objectives(&self) -> Vec<ObjectiveSpec> {
        match self.kind {
            DatasetKind::SynthRegression => vec![
                ObjectiveSpec::new(LossKind::Mse, 0, 0),
                ObjectiveSpec::new(LossKind::Mse, 0, 1),
            ],
            DatasetKind::SynthFairness | DatasetKind::Csv => vec![
                ObjectiveSpec::new(LossKind::BinaryCrossEntropy, 0, 0),
                ObjectiveSpec::new(LossKind::DeoTanh { c: 1.0 }, 0, 0),
            ],
            DatasetKind::SynthMultitask => {
                let tasks = self.classes.as_ref().map_or(2, Vec::len);
                (0..tasks)
                    .map(|t| ObjectiveSpec::new(LossKind::CrossEntropy, t, t))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
}

fn default_hidden() -> Vec<usize> {
    vec![60, 25]
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: default_hidden(),
        }
    }
}

/// Dirichlet concentration: one value for every objective, or one per objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Symmetric(f64),
    PerObjective(Vec<f64>),
}

impl AlphaSpec {
    pub fn resolve(&self, dim: usize) -> Result<DirichletParams> {
        match self {
            AlphaSpec::Symmetric(a) => DirichletParams::symmetric(*a, dim),
            AlphaSpec::PerObjective(v) if v.len() == dim => DirichletParams::new(v.clone()),
            AlphaSpec::PerObjective(v) => Err(Error::Config(format!(
                "alpha has {} entries for {dim} objectives",
                v.len()
            ))),
        }
    }
}

impl std::fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlphaSpec::Symmetric(a) => write!(f, "{a}"),
            AlphaSpec::PerObjective(v) => {
                let parts: Vec<String> = v.iter().map(f64::to_string).collect();
                f.write_str(&parts.join("-"))
            }
        }
    }
}

/// `[train]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_alpha")]
    pub alpha: AlphaSpec,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub milestones: Vec<usize>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_true")]
    pub early_stopping: bool,
}

fn default_lambda() -> f64 {
    0.01
}
fn default_alpha() -> AlphaSpec {
    AlphaSpec::Symmetric(1.0)
}
fn default_epochs() -> usize {
    50
}
fn default_batch_size() -> usize {
    256
}
fn default_lr() -> f64 {
    1e-3
}
fn default_gamma() -> f64 {
    0.1
}
fn default_true() -> bool {
    true
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            lambda: default_lambda(),
            alpha: default_alpha(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            lr: default_lr(),
            milestones: Vec::new(),
            gamma: default_gamma(),
            early_stopping: true,
        }
    }
}

/// `[eval]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default = "default_rays")]
    pub rays: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    /// Number of rays trained by `fixed_ray_sweep`.
    #[serde(default = "default_sweep_rays")]
    pub sweep_rays: usize,
    /// Objective trained by `single_task`.
    #[serde(default)]
    pub task: usize,
    /// Monte Carlo samples for the test hypervolume when `J > 3`; no HV otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<usize>,
}

fn default_rays() -> usize {
    25
}
fn default_sweep_rays() -> usize {
    5
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            rays: default_rays(),
            reference: None,
            sweep_rays: default_sweep_rays(),
            task: 0,
            monte_carlo: None,
        }
    }
}

/// A complete experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objectives: Vec<ObjectiveSpec>,
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 42]
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn new(method: Method, dataset: DatasetConfig) -> Self {
        ExperimentConfig {
            method,
            seeds: default_seeds(),
            output: default_output(),
            dataset,
            model: ModelConfig::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
            objectives: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative dataset paths resolve against its directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = ExperimentConfig::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.dataset.path, &mut cfg.dataset.schema].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("`seeds` must not be empty".into()));
        }
        let specs = self.objectives();
        if self.method == Method::SingleTask && self.eval.task >= specs.len() {
            return Err(Error::Config(format!(
                "task {} out of range for {} objectives",
                self.eval.task,
                specs.len()
            )));
        }
        if self.method == Method::FixedRaySweep && self.eval.sweep_rays == 0 {
            return Err(Error::Config("`sweep_rays` must be at least 1".into()));
        }
        if let Some(r) = &self.eval.reference {
            if r.len() != self.active_objectives().len() {
                return Err(Error::Config(format!(
                    "reference has {} coordinates for {} objectives",
                    r.len(),
                    self.active_objectives().len()
                )));
            }
        }
        self.train_config(0)?;
        if self.method == Method::Cosmos {
            self.cosmos_config(0)?;
        }
        Ok(())
    }

    /// Objectives as configured, or the dataset's defaults.
    pub fn objectives(&self) -> Vec<ObjectiveSpec> {
        if self.objectives.is_empty() {
            self.dataset.default_objectives()
        } else {
            self.objectives.clone()
        }
    }

    /// Objectives actually trained: all of them, or only `task` for single-task runs.
    pub fn active_objectives(&self) -> Vec<ObjectiveSpec> {
        let all = self.objectives();
        match self.method {
            Method::SingleTask => all.get(self.eval.task).copied().into_iter().collect(),
            _ => all,
        }
    }

    pub fn reference(&self) -> Vec<f64> {
        self.eval
            .reference
            .clone()
            .unwrap_or_else(|| crate::pareto::default_reference(self.active_objectives().len()))
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig> {
        let t = &self.train;
        let cfg = TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            schedule: LrSchedule::new(t.lr, t.milestones.clone(), t.gamma)?,
            adam: AdamParams::default(),
            seed,
            eval_rays: self.eval.rays,
            reference: Some(self.reference()),
            early_stopping: t.early_stopping,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn cosmos_config(&self, seed: u64) -> Result<CosmosConfig> {
        let dim = self.active_objectives().len();
        CosmosConfig::new(
            self.train.lambda,
            self.train.alpha.resolve(dim)?,
            self.train_config(seed)?,
        )
    }

    /// `output`, joined onto `$COSMOS_OUTPUT_ROOT` when relative and the variable is set.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if self.output.is_relative() => PathBuf::from(root).join(&self.output),
            _ => self.output.clone(),
        }
    }
}
