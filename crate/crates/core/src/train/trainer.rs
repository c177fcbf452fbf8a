use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scalarized_loss;
use crate::data::{Batch, Dataset, Split};
use crate::nn::{AdamParams, AdamState, LrSchedule, Matrix, Mlp, OutputHeads};
use crate::objectives::{evaluate_losses, validate_specs, LossVector, ObjectiveSpec};
use crate::pareto::{default_reference, hypervolume, hypervolume_monte_carlo};
use crate::preference::{
    evaluation_rays, fuse, middle_ray, sample_dirichlet, DirichletParams, PreferenceVector,
};
use crate::{Error, Result};

/// Seed of the Dirichlet evaluation rays used when `J > 3`.
pub const EVALUATION_RAY_SEED: u64 = 0;

/// Samples used by the Monte Carlo hypervolume during validation when `J > 3`.
pub const VALIDATION_MONTE_CARLO_SAMPLES: usize = 100_000;

/// Optimization settings shared by all trainers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub schedule: LrSchedule,
    pub adam: AdamParams,
    pub seed: u64,
    /// Number of rays in the validation front.
    pub eval_rays: usize,
    /// Hypervolume reference; `2.0` per objective when absent.
    pub reference: Option<Vec<f64>>,
    /// Keep the best validation epoch instead of the last one.
    pub early_stopping: bool,
}

impl TrainConfig {
    pub fn new(epochs: usize, batch_size: usize, lr: f64, seed: u64) -> Result<Self> {
        let cfg = TrainConfig {
            epochs,
            batch_size,
            schedule: LrSchedule::constant(lr)?,
            adam: AdamParams::default(),
            seed,
            eval_rays: 25,
            reference: None,
            early_stopping: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.eval_rays == 0 {
            return Err(Error::Config("need at least one evaluation ray".into()));
        }
        Ok(())
    }
}

/// Settings of the preference-conditioned trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct CosmosConfig {
    pub lambda: f64,
    pub alpha: DirichletParams,
    pub train: TrainConfig,
}

impl CosmosConfig {
    pub fn new(lambda: f64, alpha: DirichletParams, train: TrainConfig) -> Result<Self> {
        let cfg = CosmosConfig { lambda, alpha, train };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda {} must be >= 0", self.lambda)));
        }
        self.train.validate()
    }
}

/// A network together with whether it expects the ray appended to its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    mlp: Mlp,
    conditioned: bool,
    num_objectives: usize,
}

impl TrainedModel {
    pub fn new(mlp: Mlp, conditioned: bool, num_objectives: usize) -> Result<Self> {
        if num_objectives == 0 {
            return Err(Error::Argument("model needs at least one objective".into()));
        }
        Ok(TrainedModel {
            mlp,
            conditioned,
            num_objectives,
        })
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn into_mlp(self) -> Mlp {
        self.mlp
    }

    pub fn conditioned(&self) -> bool {
        self.conditioned
    }

    pub fn num_objectives(&self) -> usize {
        self.num_objectives
    }

    /// Raw outputs; the ray is appended to the inputs only for conditioned models.
    pub fn predict(&self, features: &Matrix, ray: &PreferenceVector) -> Result<Matrix> {
        if !self.conditioned {
            return self.mlp.predict(features);
        }
        if ray.dim() != self.num_objectives {
            return Err(Error::Dimension(format!(
                "ray has {} components, model was trained on {} objectives",
                ray.dim(),
                self.num_objectives
            )));
        }
        self.mlp.predict(&fuse(features, ray))
    }

    pub fn evaluate(
        &self,
        batch: &Batch,
        specs: &[ObjectiveSpec],
        ray: &PreferenceVector,
    ) -> Result<LossVector> {
        let outputs = self.predict(&batch.features, ray)?;
        Ok(evaluate_losses(specs, self.mlp.heads(), &outputs, batch)?.losses)
    }

    /// Loss vectors at every ray, evaluated in parallel.
    pub fn evaluate_rays(
        &self,
        batch: &Batch,
        specs: &[ObjectiveSpec],
        rays: &[PreferenceVector],
    ) -> Result<Vec<LossVector>> {
        rays.par_iter()
            .map(|r| self.evaluate(batch, specs, r))
            .collect()
    }
}

/// Exact hypervolume for `J <= 3`, seeded Monte Carlo above.
pub fn front_hypervolume(losses: &[LossVector], reference: &[f64]) -> Result<f64> {
    if reference.len() <= 3 {
        hypervolume(losses, reference)
    } else {
        Ok(hypervolume_monte_carlo(losses, reference, VALIDATION_MONTE_CARLO_SAMPLES, 0)?.value)
    }
}

/// MLP with `input_dim → hidden… → heads` and He-uniform weights from `seed`.
pub fn build_mlp(input_dim: usize, hidden: &[usize], heads: OutputHeads, seed: u64) -> Result<Mlp> {
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(input_dim);
    dims.extend_from_slice(hidden);
    dims.push(heads.total_width());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mlp::new(dims, heads, &mut rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    pub mean_train_loss: f64,
    pub val_hv: f64,
    /// Mean of `rᵀℓ` over the validation rays.
    pub val_scalarized: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub history: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub steps: usize,
    pub backward_passes: usize,
    /// Scalarized loss of every step, in order.
    pub step_losses: Vec<f64>,
    /// Wall time of the optimization steps only.
    pub train_seconds: f64,
    /// Wall time spent on per-epoch validation.
    pub eval_seconds: f64,
}

enum RaySource<'a> {
    Dirichlet(&'a DirichletParams),
    Fixed(&'a PreferenceVector),
}

/// Preference-conditioned training: one Dirichlet ray per mini-batch, fused
/// into the inputs, scalarized with the cosine penalty, one backward pass.
pub fn train_cosmos(
    model: Mlp,
    data: &Dataset,
    specs: &[ObjectiveSpec],
    config: &CosmosConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    run(
        model,
        data,
        specs,
        RaySource::Dirichlet(&config.alpha),
        config.lambda,
        &config.train,
    )
}

/// Plain linear scalarization `rᵀℓ` at a fixed ray, with unconditioned inputs.
pub fn train_fixed_ray(
    model: Mlp,
    data: &Dataset,
    specs: &[ObjectiveSpec],
    ray: &PreferenceVector,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    run(model, data, specs, RaySource::Fixed(ray), 0.0, config)
}

/// Training on a single objective.
pub fn train_single_task(
    model: Mlp,
    data: &Dataset,
    spec: &ObjectiveSpec,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_fixed_ray(model, data, std::slice::from_ref(spec), &middle_ray(1)?, config)
}

fn run(
    mut mlp: Mlp,
    data: &Dataset,
    specs: &[ObjectiveSpec],
    source: RaySource<'_>,
    lambda: f64,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let dim = specs.len();
    let conditioned = matches!(source, RaySource::Dirichlet(_));
    let ray_dim = match &source {
        RaySource::Dirichlet(a) => a.dim(),
        RaySource::Fixed(r) => r.dim(),
    };
    if ray_dim != dim {
        return Err(Error::Config(format!(
            "preference dimension {ray_dim} does not match {dim} objectives"
        )));
    }
    validate_specs(specs, mlp.heads(), data.targets(), data.sensitive().is_some())?;
    let expected_input = data.num_features() + if conditioned { dim } else { 0 };
    if mlp.input_dim() != expected_input {
        return Err(Error::Dimension(format!(
            "model takes {} inputs, expected {expected_input}",
            mlp.input_dim()
        )));
    }

    let train_rows = data.splits().get(Split::Train).to_vec();
    if train_rows.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    let val_batch = if data.splits().val.is_empty() {
        log::warn!("validation split is empty; early stopping uses training rows");
        data.batch(&train_rows)
    } else {
        data.split_batch(Split::Val)
    };
    let val_rays = match &source {
        RaySource::Dirichlet(_) => evaluation_rays(dim, cfg.eval_rays, EVALUATION_RAY_SEED)?,
        RaySource::Fixed(r) => vec![(*r).clone()],
    };
    let reference = cfg.reference.clone().unwrap_or_else(|| default_reference(dim));
    if reference.len() != dim {
        return Err(Error::Config(format!(
            "reference point has {} coordinates for {dim} objectives",
            reference.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut adam = AdamState::for_model(cfg.adam, &mlp);
    let heads = mlp.heads().clone();

    let mut order = train_rows;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut step_losses = Vec::new();
    let mut steps = 0usize;
    let mut backward_passes = 0usize;
    let mut train_seconds = 0.0;
    let mut eval_seconds = 0.0;
    let mut best: Option<(usize, f64, f64, Mlp)> = None;

    for epoch in 0..cfg.epochs {
        let lr = cfg.schedule.lr_at(epoch);
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_batches = 0usize;
        for rows in order.chunks(cfg.batch_size) {
            let ray = match &source {
                RaySource::Dirichlet(alpha) => sample_dirichlet(alpha, &mut rng),
                RaySource::Fixed(r) => (*r).clone(),
            };
            let batch = data.batch(rows);
            let inputs = if conditioned {
                fuse(&batch.features, &ray)
            } else {
                batch.features.clone()
            };
            let (outputs, cache) = mlp.forward(&inputs)?;
            let eval = evaluate_losses(specs, &heads, &outputs, &batch)?;
            let scalar = scalarized_loss(&ray, &eval.losses, lambda)?;
            if !eval.losses.is_finite() || !scalar.total.is_finite() {
                return Err(Error::NonFiniteLoss {
                    step: steps,
                    ray: ray.as_slice().to_vec(),
                    losses: eval.losses.into_vec(),
                });
            }
            let cotangent = eval.combine_grads(&scalar.grad)?;
            let grads = mlp.backward(&cache, &cotangent)?;
            backward_passes += 1;
            adam.step(&mut mlp, &grads, lr)?;
            steps += 1;
            step_losses.push(scalar.total);
            epoch_loss += scalar.total;
            epoch_batches += 1;
        }
        train_seconds += started.elapsed().as_secs_f64();

        let started = Instant::now();
        let snapshot = TrainedModel::new(mlp.clone(), conditioned, dim)?;
        let losses = snapshot.evaluate_rays(&val_batch, specs, &val_rays)?;
        let val_hv = front_hypervolume(&losses, &reference)?;
        let val_scalarized = losses
            .iter()
            .zip(&val_rays)
            .map(|(l, r)| l.as_slice().iter().zip(r.as_slice()).map(|(a, b)| a * b).sum::<f64>())
            .sum::<f64>()
            / val_rays.len() as f64;
        eval_seconds += started.elapsed().as_secs_f64();

        let improved = match &best {
            None => true,
            Some((_, hv, scal, _)) if conditioned => {
                val_hv > *hv || (val_hv == *hv && val_scalarized < *scal)
            }
            Some((_, _, scal, _)) => val_scalarized < *scal,
        };
        if improved {
            best = Some((epoch, val_hv, val_scalarized, mlp.clone()));
        }
        log::debug!(
            "epoch {epoch}: lr {lr:e}, train {:.5}, val hv {val_hv:.5}",
            epoch_loss / epoch_batches as f64
        );
        history.push(EpochMetrics {
            epoch,
            lr,
            mean_train_loss: epoch_loss / epoch_batches as f64,
            val_hv,
            val_scalarized,
        });
    }

    let (best_epoch, final_mlp) = match best {
        Some((epoch, _, _, params)) if cfg.early_stopping => (epoch, params),
        _ => (cfg.epochs - 1, mlp),
    };
    Ok(TrainOutcome {
        model: TrainedModel::new(final_mlp, conditioned, dim)?,
        history,
        best_epoch,
        steps,
        backward_passes,
        step_losses,
        train_seconds,
        eval_seconds,
    })
}
