use std::path::Path;

use serde::Serialize;

use super::checkpoint::write_checkpoint;
use super::config::{ExperimentConfig, Method};
use super::runner::{mean_std, AblationCell, ExperimentSummary, FrontRow, RunRecord};
use crate::train::EpochMetrics;
use crate::{Error, Result};

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `r_1..r_J, loss_1..loss_J, mcr_j` for each objective `j` with a misclassification rate.
pub fn front_header(rows: &[FrontRow]) -> Vec<String> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let mut header: Vec<String> = (1..=first.ray.len()).map(|j| format!("r_{j}")).collect();
    header.extend((1..=first.losses.len()).map(|j| format!("loss_{j}")));
    header.extend(
        first
            .mcr
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_some())
            .map(|(j, _)| format!("mcr_{}", j + 1)),
    );
    header
}

/// Writes the front as CSV to any sink.
pub fn write_front<W: std::io::Write>(rows: &[FrontRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(front_header(rows))?;
    for row in rows {
        let mut fields: Vec<String> = row.ray.iter().map(f64::to_string).collect();
        fields.extend(row.losses.iter().map(f64::to_string));
        fields.extend(row.mcr.iter().flatten().map(f64::to_string));
        w.write_record(fields)?;
    }
    w.flush().map_err(|e| Error::Data(format!("writing front: {e}")))
}

pub fn write_front_csv(rows: &[FrontRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_front(rows, std::io::BufWriter::new(file))
}

/// Rays and loss columns read back from a `front.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontTable {
    pub header: Vec<String>,
    pub rays: Vec<Vec<f64>>,
    pub losses: Vec<Vec<f64>>,
}

pub fn read_front_csv(path: impl AsRef<Path>) -> Result<FrontTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let pick = |prefix: &str| -> Vec<usize> {
        header
            .iter()
            .enumerate()
            .filter(|(_, h)| h.starts_with(prefix))
            .map(|(i, _)| i)
            .collect()
    };
    let ray_cols = pick("r_");
    let loss_cols = pick("loss_");
    if loss_cols.is_empty() {
        return Err(Error::Data(format!("{} has no loss_ columns", path.display())));
    }
    let mut rays = Vec::new();
    let mut losses = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |cols: &[usize]| -> Result<Vec<f64>> {
            cols.iter()
                .map(|&c| {
                    record[c].trim().parse::<f64>().map_err(|_| {
                        Error::Data(format!("row {}: `{}` is not a number", i + 1, &record[c]))
                    })
                })
                .collect()
        };
        rays.push(parse(&ray_cols)?);
        losses.push(parse(&loss_cols)?);
    }
    Ok(FrontTable {
        header,
        rays,
        losses,
    })
}

pub fn write_epochs_csv(histories: &[Vec<EpochMetrics>], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["model", "epoch", "val_hv", "mean_train_loss", "lr"])?;
    for (model, history) in histories.iter().enumerate() {
        for m in history {
            w.write_record([
                model.to_string(),
                m.epoch.to_string(),
                m.val_hv.to_string(),
                m.mean_train_loss.to_string(),
                m.lr.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes one seed's artifacts into `dir`.
///
/// `front.csv` (not for single-task runs), `epochs.csv`, `summary.json`,
/// `config.toml` and one checkpoint per trained network (`model.ckpt`, or
/// `model-<k>.ckpt` matching front row `k` of a sweep).
pub fn emit_run(record: &RunRecord, config: &ExperimentConfig, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    if record.method != Method::SingleTask {
        write_front_csv(&record.front, &dir.join("front.csv"))?;
    }
    write_epochs_csv(&record.histories, &dir.join("epochs.csv"))?;
    write_json(record, &dir.join("summary.json"))?;
    let config_path = dir.join("config.toml");
    std::fs::write(&config_path, config.to_toml()?).map_err(|e| Error::io(&config_path, e))?;
    if let [model] = record.models.as_slice() {
        write_checkpoint(model, dir.join("model.ckpt"))?;
    } else {
        for (k, model) in record.models.iter().enumerate() {
            write_checkpoint(model, dir.join(format!("model-{k}.ckpt")))?;
        }
    }
    Ok(())
}

pub fn write_summary(summary: &ExperimentSummary, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    write_json(summary, &dir.join("summary.json"))
}

/// Writes every record and the aggregate summary under `dir`.
pub fn emit_outputs(
    config: &ExperimentConfig,
    records: &[RunRecord],
    summary: &ExperimentSummary,
    dir: &Path,
) -> Result<()> {
    create_dir(dir)?;
    let path = dir.join("config.toml");
    std::fs::write(&path, config.to_toml()?).map_err(|e| Error::io(&path, e))?;
    for record in records {
        let mut per_seed = config.clone();
        per_seed.seeds = vec![record.seed];
        emit_run(record, &per_seed, &dir.join(format!("seed-{}", record.seed)))?;
    }
    write_summary(summary, dir)
}

/// `ablation.csv`: one row per grid cell with HV and spread statistics.
pub fn write_ablation_csv(cells: &[AblationCell], dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let path = dir.join("ablation.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["lambda", "alpha", "hv_mean", "hv_std", "spread_mean", "spread_std"])?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for cell in cells {
        let hv = mean_std(&cell.summary.hv_values);
        let spread = mean_std(&cell.summary.spread_values);
        w.write_record([
            cell.lambda.to_string(),
            cell.alpha.to_string(),
            opt(hv.map(|s| s.0)),
            opt(hv.map(|s| s.1)),
            opt(spread.map(|s| s.0)),
            opt(spread.map(|s| s.1)),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}
