//! Preference-conditioned training and the fixed-ray and single-task baselines.

mod scalarize;
mod trainer;

pub use scalarize::{cosine_similarity, scalarized_loss, ScalarizedLoss};
pub use trainer::{
    build_mlp, front_hypervolume, train_cosmos, train_fixed_ray, train_single_task, CosmosConfig,
    EpochMetrics, TrainConfig, EVALUATION_RAY_SEED, TrainOutcome, TrainedModel, VALIDATION_MONTE_CARLO_SAMPLES,
};
