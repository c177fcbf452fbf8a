use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{AlphaSpec, ExperimentConfig, Method};
use super::output::{emit_run, write_ablation_csv, write_summary};
use crate::data::{Batch, Dataset, Split};
use crate::objectives::{heads_for_specs, ObjectiveSpec};
use crate::pareto::{
    front_spread, hypervolume, hypervolume_monte_carlo, mcr, nondominated_indices,
};
use crate::preference::{evaluation_rays, middle_ray, PreferenceVector};
use crate::train::{
    build_mlp, train_cosmos, train_fixed_ray, train_single_task, EpochMetrics, TrainOutcome,
    TrainedModel, EVALUATION_RAY_SEED,
};
use crate::{Error, Result};

/// Test-split losses (and misclassification rates of classification
/// objectives) at one ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub ray: Vec<f64>,
    pub losses: Vec<f64>,
    pub mcr: Vec<Option<f64>>,
}

/// Everything produced by one seed of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub method: Method,
    /// One history per trained network (several for a fixed-ray sweep).
    pub histories: Vec<Vec<EpochMetrics>>,
    pub best_epochs: Vec<usize>,
    /// Test front, one row per evaluation ray; empty for single-task runs.
    pub front: Vec<FrontRow>,
    /// Test metrics of a single-task run.
    pub task_metrics: Option<FrontRow>,
    pub hypervolume: Option<f64>,
    pub hv_std_error: Option<f64>,
    pub nondominated: usize,
    pub spread: f64,
    pub steps: usize,
    pub backward_passes: usize,
    pub train_seconds: f64,
    pub eval_seconds: f64,
    pub param_count: usize,
    #[serde(skip)]
    pub models: Vec<TrainedModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub method: Method,
    pub num_objectives: usize,
    pub seeds: Vec<u64>,
    pub completed: usize,
    pub hv_values: Vec<f64>,
    pub hv_mean: Option<f64>,
    /// Population standard deviation over seeds.
    pub hv_std: Option<f64>,
    pub spread_values: Vec<f64>,
    pub train_seconds: Vec<f64>,
    pub eval_seconds: Vec<f64>,
    pub param_count: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub output: PathBuf,
    pub records: Vec<RunRecord>,
    pub summary: ExperimentSummary,
}

/// `(mean, population std)`; `None` for an empty slice.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

pub fn summarize(
    config: &ExperimentConfig,
    records: &[RunRecord],
    failure: Option<String>,
) -> ExperimentSummary {
    let hv_values: Vec<f64> = records.iter().filter_map(|r| r.hypervolume).collect();
    let stats = mean_std(&hv_values);
    ExperimentSummary {
        method: config.method,
        num_objectives: config.active_objectives().len(),
        seeds: config.seeds.clone(),
        completed: records.len(),
        hv_mean: stats.map(|s| s.0),
        hv_std: stats.map(|s| s.1),
        hv_values,
        spread_values: records.iter().map(|r| r.spread).collect(),
        train_seconds: records.iter().map(|r| r.train_seconds).collect(),
        eval_seconds: records.iter().map(|r| r.eval_seconds).collect(),
        param_count: records.first().map_or(0, |r| r.param_count),
        failure,
    }
}

fn test_batch(data: &Dataset) -> Result<Batch> {
    if data.splits().test.is_empty() {
        return Err(Error::Data("test split is empty".into()));
    }
    Ok(data.split_batch(Split::Test))
}

/// Losses and misclassification rates of `model` at each ray.
pub fn evaluate_front(
    model: &TrainedModel,
    batch: &Batch,
    specs: &[ObjectiveSpec],
    rays: &[PreferenceVector],
) -> Result<Vec<FrontRow>> {
    let losses = model.evaluate_rays(batch, specs, rays)?;
    rays.iter()
        .zip(losses)
        .map(|(ray, l)| {
            let mcr = specs
                .iter()
                .map(|s| {
                    if s.is_classification() {
                        mcr(model, batch, ray, s).map(Some)
                    } else {
                        Ok(None)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FrontRow {
                ray: ray.as_slice().to_vec(),
                losses: l.into_vec(),
                mcr,
            })
        })
        .collect()
}

/// Trains and evaluates one seed of `config` on `data`.
pub fn run_seed(config: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<RunRecord> {
    let specs = config.active_objectives();
    let dim = specs.len();
    let heads = heads_for_specs(&specs, data.targets())?;
    let test = test_batch(data)?;
    let hidden = &config.model.hidden;

    let mut outcomes: Vec<TrainOutcome> = Vec::new();
    let mut front = Vec::new();
    let mut task_metrics = None;
    let mut eval_seconds = 0.0;
    match config.method {
        Method::Cosmos => {
            let mlp = build_mlp(data.num_features() + dim, hidden, heads, seed)?;
            let out = train_cosmos(mlp, data, &specs, &config.cosmos_config(seed)?)?;
            let started = Instant::now();
            let rays = evaluation_rays(dim, config.eval.rays, EVALUATION_RAY_SEED)?;
            front = evaluate_front(&out.model, &test, &specs, &rays)?;
            eval_seconds += started.elapsed().as_secs_f64();
            outcomes.push(out);
        }
        Method::FixedRaySweep => {
            let rays = if dim == 1 {
                vec![middle_ray(1)?]
            } else {
                evaluation_rays(dim, config.eval.sweep_rays, EVALUATION_RAY_SEED)?
            };
            let train = config.train_config(seed)?;
            for ray in &rays {
                let mlp = build_mlp(data.num_features(), hidden, heads.clone(), seed)?;
                let out = train_fixed_ray(mlp, data, &specs, ray, &train)?;
                let started = Instant::now();
                front.extend(evaluate_front(&out.model, &test, &specs, std::slice::from_ref(ray))?);
                eval_seconds += started.elapsed().as_secs_f64();
                outcomes.push(out);
            }
        }
        Method::SingleTask => {
            let mlp = build_mlp(data.num_features(), hidden, heads, seed)?;
            let out = train_single_task(mlp, data, &specs[0], &config.train_config(seed)?)?;
            let started = Instant::now();
            let row = evaluate_front(&out.model, &test, &specs, &[middle_ray(1)?])?;
            eval_seconds += started.elapsed().as_secs_f64();
            task_metrics = row.into_iter().next();
            outcomes.push(out);
        }
    }

    let points: Vec<&[f64]> = front.iter().map(|r| r.losses.as_slice()).collect();
    let kept = nondominated_indices(&points)?;
    let filtered: Vec<&[f64]> = kept.iter().map(|&i| points[i]).collect();
    let reference = config.reference();
    let (hv, hv_se) = if front.is_empty() {
        (None, None)
    } else if dim <= 3 {
        (Some(hypervolume(&filtered, &reference)?), None)
    } else if let Some(samples) = config.eval.monte_carlo {
        let est = hypervolume_monte_carlo(&filtered, &reference, samples, seed)?;
        (Some(est.value), Some(est.std_error))
    } else {
        log::info!("hypervolume is not reported for J = {dim} without Monte Carlo");
        (None, None)
    };

    Ok(RunRecord {
        seed,
        method: config.method,
        histories: outcomes.iter().map(|o| o.history.clone()).collect(),
        best_epochs: outcomes.iter().map(|o| o.best_epoch).collect(),
        nondominated: kept.len(),
        spread: front_spread(&filtered),
        front,
        task_metrics,
        hypervolume: hv,
        hv_std_error: hv_se,
        steps: outcomes.iter().map(|o| o.steps).sum(),
        backward_passes: outcomes.iter().map(|o| o.backward_passes).sum(),
        train_seconds: outcomes.iter().map(|o| o.train_seconds).sum(),
        eval_seconds: eval_seconds + outcomes.iter().map(|o| o.eval_seconds).sum::<f64>(),
        param_count: outcomes[0].model.mlp().parameter_count(),
        models: outcomes.into_iter().map(|o| o.model).collect(),
    })
}

/// Runs every seed of `config`, writing artifacts under its output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_experiment_in(config, &config.output_dir())
}

/// Runs every seed of `config`, writing artifacts under `dir`.
///
/// Each seed's files are written as soon as it finishes. If training fails,
/// the top-level summary records the failure and the error is returned.
pub fn run_experiment_in(config: &ExperimentConfig, dir: &Path) -> Result<ExperimentOutcome> {
    config.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let resolved = resolved_config(config);
    let config_path = dir.join("config.toml");
    std::fs::write(&config_path, resolved.to_toml()?).map_err(|e| Error::io(&config_path, e))?;

    let data = config.dataset.load()?;
    log::info!(
        "{} on {} rows x {} features, seeds {:?}",
        config.method,
        data.len(),
        data.num_features(),
        config.seeds
    );
    let mut records = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        match run_seed(config, &data, seed) {
            Ok(record) => {
                let mut per_seed = resolved.clone();
                per_seed.seeds = vec![seed];
                emit_run(&record, &per_seed, &dir.join(format!("seed-{seed}")))?;
                log::info!(
                    "seed {seed}: hv {:?}, train {:.2}s",
                    record.hypervolume,
                    record.train_seconds
                );
                records.push(record);
            }
            Err(e) => {
                let summary = summarize(config, &records, Some(format!("seed {seed}: {e}")));
                write_summary(&summary, dir)?;
                return Err(e);
            }
        }
    }
    let summary = summarize(config, &records, None);
    write_summary(&summary, dir)?;
    Ok(ExperimentOutcome {
        output: dir.to_path_buf(),
        records,
        summary,
    })
}

/// The config with defaults made explicit.
pub fn resolved_config(config: &ExperimentConfig) -> ExperimentConfig {
    let mut resolved = config.clone();
    resolved.objectives = config.objectives();
    if resolved.eval.reference.is_none() {
        resolved.eval.reference = Some(config.reference());
    }
    resolved
}

#[derive(Debug, Clone)]
pub struct AblationCell {
    pub lambda: f64,
    pub alpha: AlphaSpec,
    pub output: PathBuf,
    pub summary: ExperimentSummary,
}

/// Name of the output subdirectory of one grid cell.
pub fn ablation_dir_name(lambda: f64, alpha: &AlphaSpec) -> String {
    format!("lambda-{lambda}_alpha-{alpha}")
}

/// Full experiment for every `(λ, α)` in the Cartesian product of the grids.
/// An empty grid falls back to the config's own value.
pub fn run_ablation(
    config: &ExperimentConfig,
    lambdas: &[f64],
    alphas: &[AlphaSpec],
) -> Result<Vec<AblationCell>> {
    run_ablation_in(config, lambdas, alphas, &config.output_dir())
}

pub fn run_ablation_in(
    config: &ExperimentConfig,
    lambdas: &[f64],
    alphas: &[AlphaSpec],
    dir: &Path,
) -> Result<Vec<AblationCell>> {
    if config.method != Method::Cosmos {
        return Err(Error::Config("ablation grids apply to the cosmos method".into()));
    }
    let lambdas = if lambdas.is_empty() {
        vec![config.train.lambda]
    } else {
        lambdas.to_vec()
    };
    let alphas = if alphas.is_empty() {
        vec![config.train.alpha.clone()]
    } else {
        alphas.to_vec()
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut cells = Vec::with_capacity(lambdas.len() * alphas.len());
    for &lambda in &lambdas {
        for alpha in &alphas {
            let mut cell_config = config.clone();
            cell_config.train.lambda = lambda;
            cell_config.train.alpha = alpha.clone();
            let out = dir.join(ablation_dir_name(lambda, alpha));
            let result = run_experiment_in(&cell_config, &out);
            match result {
                Ok(outcome) => cells.push(AblationCell {
                    lambda,
                    alpha: alpha.clone(),
                    output: out,
                    summary: outcome.summary,
                }),
                Err(e) => {
                    write_ablation_csv(&cells, dir)?;
                    return Err(e);
                }
            }
        }
    }
    write_ablation_csv(&cells, dir)?;
    Ok(cells)
}

/// Re-evaluates a stored model on the test split of `config`'s dataset.
///
/// Conditioned models are evaluated at `rays` evaluation rays; unconditioned
/// ones produce a single row.
pub fn evaluate_checkpoint(
    config: &ExperimentConfig,
    model: &TrainedModel,
    rays: usize,
) -> Result<Vec<FrontRow>> {
    let specs = config.active_objectives();
    if specs.len() != model.num_objectives() {
        return Err(Error::Config(format!(
            "checkpoint has {} objectives, config {}",
            model.num_objectives(),
            specs.len()
        )));
    }
    let data = config.dataset.load()?;
    let test = test_batch(&data)?;
    let rays = if model.conditioned() {
        evaluation_rays(specs.len(), rays, EVALUATION_RAY_SEED)?
    } else {
        vec![middle_ray(specs.len())?]
    };
    evaluate_front(model, &test, &specs, &rays)
}
