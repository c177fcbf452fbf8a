use crate::data::{Batch, TargetColumn};
use crate::objectives::{LossKind, ObjectiveSpec};
use crate::preference::PreferenceVector;
use crate::train::TrainedModel;
use crate::{Error, Result};

/// Class predicted by the conditioned model for every row of `batch`.
///
/// Softmax heads use the first maximal logit; single-logit heads predict 1
/// when the logit is positive.
pub fn predicted_labels(
    model: &TrainedModel,
    batch: &Batch,
    ray: &PreferenceVector,
    spec: &ObjectiveSpec,
) -> Result<Vec<usize>> {
    if !spec.is_classification() {
        return Err(Error::Usage(format!(
            "misclassification rate needs a classification objective, got {:?}",
            spec.kind
        )));
    }
    let range = model.mlp().heads().range(spec.head).ok_or_else(|| {
        Error::Usage(format!("model has no head {}", spec.head))
    })?;
    let outputs = model.predict(&batch.features, ray)?;
    Ok((0..outputs.rows())
        .map(|i| {
            let logits = &outputs.row(i)[range.clone()];
            match spec.kind {
                LossKind::CrossEntropy => {
                    let mut best = 0;
                    for (k, v) in logits.iter().enumerate() {
                        if *v > logits[best] {
                            best = k;
                        }
                    }
                    best
                }
                _ => usize::from(logits[0] > 0.0),
            }
        })
        .collect())
}

/// Fraction of rows of `batch` misclassified at `ray`.
pub fn mcr(
    model: &TrainedModel,
    batch: &Batch,
    ray: &PreferenceVector,
    spec: &ObjectiveSpec,
) -> Result<f64> {
    let predicted = predicted_labels(model, batch, ray, spec)?;
    let labels = match batch.targets.get(spec.target) {
        Some(TargetColumn::Classes { labels, .. }) => labels,
        _ => {
            return Err(Error::Usage(format!(
                "target {} is not a class column",
                spec.target
            )))
        }
    };
    if labels.is_empty() {
        return Err(Error::Data("misclassification rate of an empty batch".into()));
    }
    let wrong = predicted.iter().zip(labels).filter(|(p, y)| p != y).count();
    Ok(wrong as f64 / labels.len() as f64)
}
