use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use cosmos_core::experiment::{
    evaluate_checkpoint, read_checkpoint, read_front_csv, run_ablation_in, run_experiment_in,
    write_front, write_front_csv, AlphaSpec, ExperimentConfig,
};
use cosmos_core::pareto::{hypervolume, hypervolume_monte_carlo};

#[derive(Parser)]
#[command(name = "cosmos", version, about = "Preference-conditioned multi-objective training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate every seed of an experiment config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the config over a grid of penalty weights and Dirichlet concentrations.
    Ablate {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        lambda: Vec<f64>,
        /// Symmetric concentrations, one per grid cell.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        alpha: Vec<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on the test split at K rays and print the front as CSV.
    Eval {
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 25)]
        rays: usize,
        /// Experiment config; defaults to `config.toml` next to the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Hypervolume of the loss columns of a front CSV.
    Hv {
        front: PathBuf,
        #[arg(long = "ref", value_delimiter = ',', num_args = 1..)]
        reference: Option<Vec<f64>>,
        /// Use the Monte Carlo estimator with this many samples.
        #[arg(long)]
        monte_carlo: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig> {
    ExperimentConfig::from_file(path).with_context(|| format!("reading {}", path.display()))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { config, output } => {
            let cfg = load_config(&config)?;
            let dir = output.unwrap_or_else(|| cfg.output_dir());
            let outcome = run_experiment_in(&cfg, &dir)?;
            let s = &outcome.summary;
            match (s.hv_mean, s.hv_std) {
                (Some(m), Some(sd)) => println!("hv {m:.4} ± {sd:.4} over {} seeds", s.completed),
                _ => println!("completed {} seeds", s.completed),
            }
            println!("results in {}", dir.display());
        }
        Command::Ablate {
            config,
            lambda,
            alpha,
            output,
        } => {
            let cfg = load_config(&config)?;
            let dir = output.unwrap_or_else(|| cfg.output_dir());
            let alphas: Vec<AlphaSpec> = alpha.into_iter().map(AlphaSpec::Symmetric).collect();
            let cells = run_ablation_in(&cfg, &lambda, &alphas, &dir)?;
            println!("lambda\talpha\thv_mean\tspread_mean");
            for cell in &cells {
                let spread = cell.summary.spread_values.iter().sum::<f64>()
                    / cell.summary.spread_values.len().max(1) as f64;
                let hv = cell.summary.hv_mean.map_or("-".to_string(), |h| format!("{h:.4}"));
                println!("{}\t{}\t{hv}\t{spread:.4}", cell.lambda, cell.alpha);
            }
            println!("results in {}", dir.display());
        }
        Command::Eval {
            checkpoint,
            rays,
            config,
            output,
        } => {
            let config = match config {
                Some(c) => c,
                None => checkpoint
                    .parent()
                    .map(|p| p.join("config.toml"))
                    .context("checkpoint path has no parent directory")?,
            };
            let cfg = load_config(&config)?;
            let model = read_checkpoint(&checkpoint)
                .with_context(|| format!("reading {}", checkpoint.display()))?;
            let rows = evaluate_checkpoint(&cfg, &model, rays)?;
            match output {
                Some(path) => write_front_csv(&rows, &path)?,
                None => write_front(&rows, std::io::stdout().lock())?,
            }
        }
        Command::Hv {
            front,
            reference,
            monte_carlo,
            seed,
        } => {
            let table = read_front_csv(&front)?;
            let dim = table.losses.first().map_or(0, Vec::len);
            let reference = reference.unwrap_or_else(|| cosmos_core::pareto::default_reference(dim));
            if table.losses.is_empty() {
                bail!("{} has no rows", front.display());
            }
            match monte_carlo {
                Some(samples) => {
                    let est = hypervolume_monte_carlo(&table.losses, &reference, samples, seed)?;
                    println!("{} ± {}", est.value, est.std_error);
                }
                None => println!("{}", hypervolume(&table.losses, &reference)?),
            }
        }
    }
    Ok(())
}
