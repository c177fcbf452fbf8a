//! Experiment configs, seeded runs, ablation grids and on-disk artifacts.

mod checkpoint;
mod config;
mod output;
mod runner;

pub use checkpoint::{checkpoint_from_str, checkpoint_to_string, read_checkpoint, write_checkpoint};
pub use config::{
    AlphaSpec, DatasetConfig, DatasetKind, EvalSection, ExperimentConfig, Method, ModelConfig,
    TrainSection, OUTPUT_ROOT_ENV,
};
pub use output::{
    emit_outputs, emit_run, front_header, read_front_csv, write_ablation_csv, write_epochs_csv,
    write_front, write_front_csv, write_summary, FrontTable,
};
pub use runner::{
    ablation_dir_name, evaluate_checkpoint, evaluate_front, mean_std, resolved_config,
    run_ablation, run_ablation_in, run_experiment, run_experiment_in, run_seed, summarize,
    AblationCell, ExperimentOutcome, ExperimentSummary, FrontRow, RunRecord,
};
