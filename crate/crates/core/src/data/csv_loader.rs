use std::collections::BTreeSet;
use std::path::Path;

use super::{ColumnRole, Dataset, LabelMapping, Splits, TabularSchema, TargetColumn};
use crate::nn::Matrix;
use crate::{Error, Result};

enum Encoder {
    Numeric { column: usize, mean: f64, std: f64 },
    OneHot { column: usize, levels: Vec<String> },
    Sensitive { column: usize },
}

impl Encoder {
    fn width(&self) -> usize {
        match self {
            Encoder::OneHot { levels, .. } => levels.len(),
            _ => 1,
        }
    }
}

fn parse_number(value: &str, column: &str, row: usize) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            Error::Data(format!(
                "row {}: column `{column}` value `{value}` is not a finite number",
                row + 1
            ))
        })
}

/// Reads a headed, comma-separated file and encodes it per `schema`.
///
/// Rows are split with `fractions`/`seed` first; categorical levels and
/// numeric mean/std come from the training rows only. Levels that appear only
/// in val/test rows encode as all zeros.
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &TabularSchema,
    fractions: [f64; 3],
    seed: u64,
) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Data(format!("{}: {other:?}", path.display())),
        })?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();

    for (name, _) in &schema.roles {
        if !header.contains(name) {
            return Err(Error::Data(format!(
                "schema column `{name}` is missing from {}",
                path.display()
            )));
        }
    }
    if let Some(unassigned) = header.iter().find(|h| schema.role(h).is_none()) {
        return Err(Error::Data(format!(
            "column `{unassigned}` has no role in the schema"
        )));
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("row {}: {e}", i + 1)))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        rows.push(record.iter().map(str::to_owned).collect());
    }
    let n = rows.len();

    let index_of = |name: &str| header.iter().position(|h| h == name).unwrap();
    let label_col = index_of(schema.column_with(ColumnRole::Label).unwrap());
    let label_name = &header[label_col];

    let (labels, num_classes) = match &schema.label_mapping {
        LabelMapping::Positive(pos) => (
            rows.iter()
                .map(|r| usize::from(pos.contains(&r[label_col])))
                .collect::<Vec<_>>(),
            2,
        ),
        LabelMapping::Classes(classes) => {
            let labels = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    classes.iter().position(|c| *c == r[label_col]).ok_or_else(|| {
                        Error::Data(format!(
                            "row {}: unknown label `{}` in `{label_name}`",
                            i + 1,
                            r[label_col]
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (labels, classes.len())
        }
        LabelMapping::Integer => {
            let labels = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    r[label_col].parse::<usize>().map_err(|_| {
                        Error::Data(format!(
                            "row {}: label `{}` is not a class id",
                            i + 1,
                            r[label_col]
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let k = labels.iter().max().map_or(2, |m| (m + 1).max(2));
            (labels, k)
        }
    };

    let sensitive_col = schema.column_with(ColumnRole::Sensitive).map(index_of);
    let sensitive: Option<Vec<u8>> = sensitive_col.map(|c| {
        rows.iter()
            .map(|r| u8::from(schema.sensitive_positive.contains(&r[c])))
            .collect()
    });

    let splits = Splits::random(n, fractions, seed)?;

    let mut encoders = Vec::new();
    for (column, name) in header.iter().enumerate() {
        match schema.role(name).unwrap() {
            ColumnRole::Numeric => {
                let values = splits
                    .train
                    .iter()
                    .map(|&i| parse_number(&rows[i][column], name, i))
                    .collect::<Result<Vec<_>>>()?;
                let count = values.len().max(1) as f64;
                let mean = values.iter().sum::<f64>() / count;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
                let std = if var > 0.0 { var.sqrt() } else { 1.0 };
                encoders.push(Encoder::Numeric { column, mean, std });
            }
            ColumnRole::Categorical => {
                let levels: BTreeSet<&str> = splits
                    .train
                    .iter()
                    .map(|&i| rows[i][column].as_str())
                    .collect();
                encoders.push(Encoder::OneHot {
                    column,
                    levels: levels.into_iter().map(str::to_owned).collect(),
                });
            }
            ColumnRole::Sensitive if schema.sensitive_as_feature => {
                encoders.push(Encoder::Sensitive { column });
            }
            _ => {}
        }
    }

    let width: usize = encoders.iter().map(Encoder::width).sum();
    let mut data = Vec::with_capacity(n * width);
    let mut unknown = vec![0usize; header.len()];
    for (i, row) in rows.iter().enumerate() {
        for enc in &encoders {
            match enc {
                Encoder::Numeric { column, mean, std } => {
                    let v = parse_number(&row[*column], &header[*column], i)?;
                    data.push((v - mean) / std);
                }
                Encoder::OneHot { column, levels } => {
                    let hit = levels.iter().position(|l| *l == row[*column]);
                    if hit.is_none() {
                        unknown[*column] += 1;
                    }
                    data.extend((0..levels.len()).map(|k| if Some(k) == hit { 1.0 } else { 0.0 }));
                }
                Encoder::Sensitive { column } => {
                    data.push(f64::from(u8::from(
                        schema.sensitive_positive.contains(&row[*column]),
                    )));
                }
            }
        }
    }
    for (column, &count) in unknown.iter().enumerate() {
        if count > 0 {
            log::warn!(
                "{count} rows carry `{}` levels unseen in training; encoded as all zeros",
                header[column]
            );
        }
    }
    log::info!("{}: {n} rows x {width} features", path.display());

    Dataset::new(
        Matrix::from_vec(n, width, data)?,
        vec![TargetColumn::Classes {
            labels,
            num_classes,
        }],
        sensitive,
    )?
    .with_splits(splits)
}
