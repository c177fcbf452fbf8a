//! Per-objective losses and their gradients with respect to model outputs.

use serde::{Deserialize, Serialize};

use crate::data::{Batch, TargetColumn};
use crate::nn::{Matrix, OutputHeads};
use crate::{Error, Result};

/// One loss value per objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(values: Vec<f64>) -> Self {
        LossVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl AsRef<[f64]> for LossVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn default_sharpness() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    /// Softmax cross-entropy over a head of `K >= 2` logits.
    CrossEntropy,
    /// Log-sigmoid cross-entropy on a single logit.
    BinaryCrossEntropy,
    /// Squared error of a single real output.
    Mse,
    /// Relaxed difference of equality of opportunity on a single logit.
    DeoTanh {
        #[serde(default = "default_sharpness")]
        c: f64,
    },
}

/// Which loss an objective applies, which output head it reads and which
/// target column it compares against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    #[serde(flatten)]
    pub kind: LossKind,
    #[serde(default)]
    pub head: usize,
    #[serde(default)]
    pub target: usize,
}

impl ObjectiveSpec {
    pub fn new(kind: LossKind, head: usize, target: usize) -> Self {
        ObjectiveSpec { kind, head, target }
    }

    pub fn is_classification(&self) -> bool {
        matches!(
            self.kind,
            LossKind::CrossEntropy | LossKind::BinaryCrossEntropy
        )
    }

    /// Head width this loss requires, given the number of classes of its target.
    pub fn head_width(&self, target: &TargetColumn) -> usize {
        match (self.kind, target) {
            (LossKind::CrossEntropy, TargetColumn::Classes { num_classes, .. }) => *num_classes,
            _ => 1,
        }
    }
}

/// Mean negative log-softmax of the true class; gradient `(softmax - onehot)/B`.
pub fn cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (rows, k) = logits.shape();
    if labels.len() != rows {
        return Err(Error::Dimension(format!(
            "{} labels for {rows} rows",
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::Data(format!("label {bad} outside [0, {k})")));
    }
    let mut grad = Matrix::zeros(rows, k);
    if rows == 0 {
        return Ok((0.0, grad));
    }
    let scale = 1.0 / rows as f64;
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let z = logits.row(i);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
        let log_norm = max + sum.ln();
        total += log_norm - z[label];
        for (g, v) in grad.row_mut(i).iter_mut().zip(z) {
            *g = (v - log_norm).exp() * scale;
        }
        grad.row_mut(i)[label] -= scale;
    }
    Ok((total * scale, grad))
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_binary(labels: &[usize], n: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::Dimension(format!("{} labels for {n} rows", labels.len())));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Data(format!("binary label {bad} is not 0 or 1")));
    }
    Ok(())
}

/// Mean `softplus(z) - y·z`; gradient `(σ(z) - y)/B`.
pub fn binary_cross_entropy(logits: &[f64], labels: &[usize]) -> Result<(f64, Vec<f64>)> {
    check_binary(labels, logits.len())?;
    if logits.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let scale = 1.0 / logits.len() as f64;
    let mut total = 0.0;
    let grad = logits
        .iter()
        .zip(labels)
        .map(|(&z, &y)| {
            let y = y as f64;
            total += z.max(0.0) - y * z + (-z.abs()).exp().ln_1p();
            (sigmoid(z) - y) * scale
        })
        .collect();
    Ok((total * scale, grad))
}

/// Mean squared error; gradient `2(p - t)/B`.
pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if predictions.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let scale = 1.0 / predictions.len() as f64;
    let mut total = 0.0;
    let grad = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| {
            let d = p - t;
            total += d * d;
            2.0 * d * scale
        })
        .collect();
    Ok((total * scale, grad))
}

/// `| mean_{a=0,y=1} t(z) - mean_{a=1,y=1} t(z) |` with `t(z) = tanh(c·max(0, z))`.
///
/// Each group is averaged over its own positive-label count. A group without
/// positives contributes 0 and logs a warning. The subgradient of `max(0, ·)`
/// and of `|·|` at 0 is taken as 0.
pub fn deo_tanh(
    logits: &[f64],
    labels: &[usize],
    sensitive: &[u8],
    c: f64,
) -> Result<(f64, Vec<f64>)> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Config(format!("DEO sharpness c = {c} must be positive")));
    }
    check_binary(labels, logits.len())?;
    if sensitive.len() != logits.len() {
        return Err(Error::Dimension(format!(
            "{} sensitive values for {} rows",
            sensitive.len(),
            logits.len()
        )));
    }

    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for ((&z, &y), &a) in logits.iter().zip(labels).zip(sensitive) {
        if y == 1 {
            let g = usize::from(a != 0);
            sums[g] += (c * z.max(0.0)).tanh();
            counts[g] += 1;
        }
    }
    let mut means = [0.0; 2];
    for g in 0..2 {
        if counts[g] == 0 {
            log::warn!("DEO: sensitive group {g} has no positive labels in this batch");
        } else {
            means[g] = sums[g] / counts[g] as f64;
        }
    }
    let diff = means[0] - means[1];
    let sign = if diff > 0.0 {
        1.0
    } else if diff < 0.0 {
        -1.0
    } else {
        0.0
    };

    let grad = logits
        .iter()
        .zip(labels)
        .zip(sensitive)
        .map(|((&z, &y), &a)| {
            if y != 1 || z <= 0.0 || sign == 0.0 {
                return 0.0;
            }
            let g = usize::from(a != 0);
            let th = (c * z).tanh();
            let dt = c * (1.0 - th * th);
            let group_sign = if g == 0 { 1.0 } else { -1.0 };
            sign * group_sign * dt / counts[g] as f64
        })
        .collect();
    Ok((diff.abs(), grad))
}

/// Checks that every spec can be evaluated on the given heads and targets.
pub fn validate_specs(
    specs: &[ObjectiveSpec],
    heads: &OutputHeads,
    targets: &[TargetColumn],
    has_sensitive: bool,
) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Config("at least one objective is required".into()));
    }
    for (j, spec) in specs.iter().enumerate() {
        let width = heads.width(spec.head).ok_or_else(|| {
            Error::Config(format!(
                "objective {j} reads head {} but the model has {} heads",
                spec.head,
                heads.len()
            ))
        })?;
        let target = targets.get(spec.target).ok_or_else(|| {
            Error::Config(format!(
                "objective {j} reads target {} but the data has {} target columns",
                spec.target,
                targets.len()
            ))
        })?;
        let ok = match (spec.kind, target) {
            (LossKind::CrossEntropy, TargetColumn::Classes { num_classes, .. }) => {
                width == *num_classes && width >= 2
            }
            (LossKind::BinaryCrossEntropy, TargetColumn::Classes { num_classes, .. })
            | (LossKind::DeoTanh { .. }, TargetColumn::Classes { num_classes, .. }) => {
                width == 1 && *num_classes == 2
            }
            (LossKind::Mse, TargetColumn::Real(_)) => width == 1,
            _ => false,
        };
        if !ok {
            return Err(Error::Config(format!(
                "objective {j} ({:?}) does not fit a head of width {width} and its target column",
                spec.kind
            )));
        }
        if let LossKind::DeoTanh { c } = spec.kind {
            if !has_sensitive {
                return Err(Error::Config(format!(
                    "objective {j} needs a sensitive attribute"
                )));
            }
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Config(format!("DEO sharpness c = {c} must be positive")));
            }
        }
    }
    Ok(())
}

/// Output heads implied by `specs`: one head per distinct `spec.head`, sized
/// by the loss and target it feeds.
pub fn heads_for_specs(specs: &[ObjectiveSpec], targets: &[TargetColumn]) -> Result<OutputHeads> {
    let count = specs.iter().map(|s| s.head + 1).max().unwrap_or(0);
    let mut widths: Vec<Option<usize>> = vec![None; count];
    for (j, spec) in specs.iter().enumerate() {
        let target = targets.get(spec.target).ok_or_else(|| {
            Error::Config(format!(
                "objective {j} reads target {} but the data has {} target columns",
                spec.target,
                targets.len()
            ))
        })?;
        let width = spec.head_width(target);
        match widths[spec.head] {
            Some(w) if w != width => {
                return Err(Error::Config(format!(
                    "head {} is used with widths {w} and {width}",
                    spec.head
                )))
            }
            _ => widths[spec.head] = Some(width),
        }
    }
    let widths = widths
        .into_iter()
        .enumerate()
        .map(|(h, w)| w.ok_or_else(|| Error::Config(format!("head {h} is read by no objective"))))
        .collect::<Result<Vec<_>>>()?;
    OutputHeads::new(widths)
}

/// Loss vector and, per objective, ∂ℓ_j/∂outputs (full output width).
#[derive(Debug, Clone)]
pub struct LossEvaluation {
    pub losses: LossVector,
    pub output_grads: Vec<Matrix>,
}

impl LossEvaluation {
    /// `Σ_j weights_j · ∂ℓ_j/∂outputs`: the cotangent for a single backward pass.
    pub fn combine_grads(&self, weights: &[f64]) -> Result<Matrix> {
        if weights.len() != self.output_grads.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} objectives",
                weights.len(),
                self.output_grads.len()
            )));
        }
        let (rows, cols) = self.output_grads[0].shape();
        let mut out = Matrix::zeros(rows, cols);
        for (g, &w) in self.output_grads.iter().zip(weights) {
            out.add_scaled(g, w)?;
        }
        Ok(out)
    }
}

fn single_column(outputs: &Matrix, col: usize) -> Vec<f64> {
    outputs.column(col)
}

fn scatter_column(rows: usize, cols: usize, col: usize, values: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for (i, v) in values.iter().enumerate() {
        m[(i, col)] = *v;
    }
    m
}

/// Evaluates every objective on `outputs` (the model's raw outputs for `batch`).
pub fn evaluate_losses(
    specs: &[ObjectiveSpec],
    heads: &OutputHeads,
    outputs: &Matrix,
    batch: &Batch,
) -> Result<LossEvaluation> {
    validate_specs(specs, heads, &batch.targets, batch.sensitive.is_some())?;
    if outputs.cols() != heads.total_width() || outputs.rows() != batch.len() {
        return Err(Error::Dimension(format!(
            "outputs are {}x{}, expected {}x{}",
            outputs.rows(),
            outputs.cols(),
            batch.len(),
            heads.total_width()
        )));
    }
    let (rows, cols) = outputs.shape();
    let mut losses = Vec::with_capacity(specs.len());
    let mut output_grads = Vec::with_capacity(specs.len());
    for spec in specs {
        let range = heads.range(spec.head).expect("validated head");
        let target = &batch.targets[spec.target];
        let (loss, grad) = match (spec.kind, target) {
            (LossKind::CrossEntropy, TargetColumn::Classes { labels, .. }) => {
                let (loss, g) = cross_entropy(&outputs.column_block(range.start, range.end), labels)?;
                let mut full = Matrix::zeros(rows, cols);
                for i in 0..rows {
                    full.row_mut(i)[range.clone()].copy_from_slice(g.row(i));
                }
                (loss, full)
            }
            (LossKind::BinaryCrossEntropy, TargetColumn::Classes { labels, .. }) => {
                let (loss, g) = binary_cross_entropy(&single_column(outputs, range.start), labels)?;
                (loss, scatter_column(rows, cols, range.start, &g))
            }
            (LossKind::Mse, TargetColumn::Real(t)) => {
                let (loss, g) = mse(&single_column(outputs, range.start), t)?;
                (loss, scatter_column(rows, cols, range.start, &g))
            }
            (LossKind::DeoTanh { c }, TargetColumn::Classes { labels, .. }) => {
                let sensitive = batch.sensitive.as_deref().expect("validated sensitive");
                let (loss, g) = deo_tanh(&single_column(outputs, range.start), labels, sensitive, c)?;
                (loss, scatter_column(rows, cols, range.start, &g))
            }
            _ => unreachable!("validated spec/target pairing"),
        };
        losses.push(loss);
        output_grads.push(grad);
    }
    Ok(LossEvaluation {
        losses: LossVector::new(losses),
        output_grads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LN2: f64 = std::f64::consts::LN_2;

    fn fd<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (f(&p) - f(&m)) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let scale = a
            .iter()
            .chain(b)
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-8);
        a.iter()
            .zip(b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
            / scale
    }

    #[test]
    fn uniform_logits_give_ln_k() {
        for k in [2, 3, 10] {
            let logits = Matrix::from_vec(4, k, vec![0.7; 4 * k]).unwrap();
            let (loss, _) = cross_entropy(&logits, &[0, 1, 0, 1]).unwrap();
            assert!((loss - (k as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_margin_gives_zero_loss() {
        let logits = Matrix::from_rows(&[[1000.0, 0.0, 0.0]]).unwrap();
        let (loss, grad) = cross_entropy(&logits, &[0]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.as_slice().iter().all(|g| g.abs() < 1e-300));
    }

    #[test]
    fn cross_entropy_label_out_of_range() {
        let logits = Matrix::zeros(1, 3);
        assert!(matches!(cross_entropy(&logits, &[3]), Err(Error::Data(_))));
    }

    #[test]
    fn cross_entropy_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..15).map(|_| rng.random_range(-2.0..2.0)).collect();
        let labels = [0, 2, 1, 1, 0];
        let f = |v: &[f64]| cross_entropy(&Matrix::from_vec(5, 3, v.to_vec()).unwrap(), &labels).unwrap().0;
        let (_, g) = cross_entropy(&Matrix::from_vec(5, 3, x.clone()).unwrap(), &labels).unwrap();
        assert!(rel_err(g.as_slice(), &fd(f, &x)) < 1e-6);
    }

    #[test]
    fn bce_at_zero_logit_is_ln2() {
        assert!((binary_cross_entropy(&[0.0], &[1]).unwrap().0 - LN2).abs() < 1e-15);
        assert!((binary_cross_entropy(&[0.0], &[0]).unwrap().0 - LN2).abs() < 1e-15);
        assert!(binary_cross_entropy(&[0.0], &[2]).is_err());
    }

    #[test]
    fn bce_is_stable_for_large_logits() {
        let (loss, grad) = binary_cross_entropy(&[800.0, -800.0], &[1, 0]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|g| g.abs() < 1e-300));
        let (loss, _) = binary_cross_entropy(&[-800.0], &[1]).unwrap();
        assert!((loss - 800.0).abs() < 1e-9);
    }

    #[test]
    fn bce_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..12).map(|_| rng.random_range(-3.0..3.0)).collect();
        let labels: Vec<usize> = (0..12).map(|i| i % 2).collect();
        let f = |v: &[f64]| binary_cross_entropy(v, &labels).unwrap().0;
        let (_, g) = binary_cross_entropy(&x, &labels).unwrap();
        assert!(rel_err(&g, &fd(f, &x)) < 1e-6);
    }

    #[test]
    fn mse_matches_finite_differences() {
        let x = [0.3, -1.2, 2.0];
        let t = [0.0, -1.0, 1.5];
        let (loss, g) = mse(&x, &t).unwrap();
        assert!((loss - (0.09 + 0.04 + 0.25) / 3.0).abs() < 1e-15);
        assert!(rel_err(&g, &fd(|v| mse(v, &t).unwrap().0, &x)) < 1e-6);
    }

    #[test]
    fn deo_of_constant_classifier_is_zero() {
        let labels = [1, 1, 0, 1, 1, 0];
        let sensitive = [0, 1, 0, 1, 0, 1];
        let (loss, grad) = deo_tanh(&[0.8; 6], &labels, &sensitive, 1.0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn deo_saturates_at_one() {
        let logits = [0.0, 0.0, 1e3, 1e3];
        let (loss, _) = deo_tanh(&logits, &[1, 1, 1, 1], &[0, 0, 1, 1], 1.0).unwrap();
        assert!((loss - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deo_uses_group_conditional_means() {
        // Group 0 positives: tanh(1), tanh(3); group 1 positive: tanh(2).
        let logits = [1.0, 3.0, 2.0, 5.0, -1.0];
        let labels = [1, 1, 1, 0, 1];
        let sensitive = [0, 0, 1, 1, 1];
        let (loss, _) = deo_tanh(&logits, &labels, &sensitive, 1.0).unwrap();
        let expected = ((1f64.tanh() + 3f64.tanh()) / 2.0 - (2f64.tanh() + 0.0) / 2.0).abs();
        assert!((loss - expected).abs() < 1e-15);
    }

    #[test]
    fn deo_empty_group_contributes_zero() {
        let (loss, _) = deo_tanh(&[2.0, 1.0], &[1, 0], &[0, 1], 1.0).unwrap();
        assert!((loss - 2f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn deo_matches_finite_differences_away_from_kinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let v: f64 = rng.random_range(-2.0..2.0);
                if v.abs() < 0.05 { v + 0.1 } else { v }
            })
            .collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let sensitive: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        for c in [0.5, 1.0, 2.0] {
            let f = |v: &[f64]| deo_tanh(v, &labels, &sensitive, c).unwrap().0;
            let (_, g) = deo_tanh(&x, &labels, &sensitive, c).unwrap();
            assert!(rel_err(&g, &fd(f, &x)) < 1e-6);
        }
    }

    #[test]
    fn deo_rejects_bad_sharpness() {
        assert!(deo_tanh(&[0.0], &[1], &[0], 0.0).is_err());
    }

    fn regression_batch(pred_targets: (&[f64], &[f64])) -> Batch {
        Batch {
            features: Matrix::zeros(pred_targets.0.len(), 1),
            targets: vec![
                TargetColumn::Real(pred_targets.0.to_vec()),
                TargetColumn::Real(pred_targets.1.to_vec()),
            ],
            sensitive: None,
        }
    }

    #[test]
    fn single_mse_on_exact_predictions() {
        let batch = regression_batch((&[0.5, -1.0], &[0.0, 0.0]));
        let outputs = Matrix::from_rows(&[[0.5], [-1.0]]).unwrap();
        let spec = [ObjectiveSpec::new(LossKind::Mse, 0, 0)];
        let eval = evaluate_losses(&spec, &OutputHeads::single(1), &outputs, &batch).unwrap();
        assert_eq!(eval.losses.as_slice(), &[0.0]);
    }

    #[test]
    fn bce_and_deo_on_constant_classifier() {
        let batch = Batch {
            features: Matrix::zeros(4, 1),
            targets: vec![TargetColumn::Classes {
                labels: vec![0, 1, 0, 1],
                num_classes: 2,
            }],
            sensitive: Some(vec![0, 0, 1, 1]),
        };
        let specs = [
            ObjectiveSpec::new(LossKind::BinaryCrossEntropy, 0, 0),
            ObjectiveSpec::new(LossKind::DeoTanh { c: 1.0 }, 0, 0),
        ];
        let eval =
            evaluate_losses(&specs, &OutputHeads::single(1), &Matrix::zeros(4, 1), &batch).unwrap();
        assert!((eval.losses.as_slice()[0] - LN2).abs() < 1e-15);
        assert_eq!(eval.losses.as_slice()[1], 0.0);
    }

    #[test]
    fn evaluation_is_the_tuple_of_individual_losses() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows = 9;
        let outputs = Matrix::from_vec(
            rows,
            5,
            (0..rows * 5).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap();
        let l1: Vec<usize> = (0..rows).map(|_| rng.random_range(0..3)).collect();
        let l2: Vec<usize> = (0..rows).map(|_| rng.random_range(0..2)).collect();
        let batch = Batch {
            features: Matrix::zeros(rows, 1),
            targets: vec![
                TargetColumn::Classes {
                    labels: l1.clone(),
                    num_classes: 3,
                },
                TargetColumn::Classes {
                    labels: l2.clone(),
                    num_classes: 2,
                },
            ],
            sensitive: None,
        };
        let heads = OutputHeads::new(vec![3, 2]).unwrap();
        let specs = [
            ObjectiveSpec::new(LossKind::CrossEntropy, 0, 0),
            ObjectiveSpec::new(LossKind::CrossEntropy, 1, 1),
        ];
        let eval = evaluate_losses(&specs, &heads, &outputs, &batch).unwrap();
        let (a, ga) = cross_entropy(&outputs.column_block(0, 3), &l1).unwrap();
        let (b, gb) = cross_entropy(&outputs.column_block(3, 5), &l2).unwrap();
        assert_eq!(eval.losses.as_slice(), &[a, b]);
        assert_eq!(eval.output_grads[0].column_block(0, 3), ga);
        assert_eq!(eval.output_grads[1].column_block(3, 5), gb);
        assert!(eval.output_grads[0].column_block(3, 5).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn heads_from_specs() {
        let targets = vec![
            TargetColumn::Classes { labels: vec![0], num_classes: 3 },
            TargetColumn::Classes { labels: vec![1], num_classes: 2 },
        ];
        let specs = [
            ObjectiveSpec::new(LossKind::CrossEntropy, 0, 0),
            ObjectiveSpec::new(LossKind::BinaryCrossEntropy, 1, 1),
            ObjectiveSpec::new(LossKind::DeoTanh { c: 1.0 }, 1, 1),
        ];
        assert_eq!(heads_for_specs(&specs, &targets).unwrap().widths(), &[3, 1]);
        let gap = [ObjectiveSpec::new(LossKind::Mse, 1, 0)];
        assert!(heads_for_specs(&gap, &targets).is_err());
        let clash = [
            ObjectiveSpec::new(LossKind::CrossEntropy, 0, 0),
            ObjectiveSpec::new(LossKind::BinaryCrossEntropy, 0, 1),
        ];
        assert!(heads_for_specs(&clash, &targets).is_err());
    }

    #[test]
    fn config_errors() {
        let batch = regression_batch((&[0.0], &[0.0]));
        let outputs = Matrix::zeros(1, 1);
        let heads = OutputHeads::single(1);
        let wrong_head = [ObjectiveSpec::new(LossKind::Mse, 1, 0)];
        assert!(matches!(
            evaluate_losses(&wrong_head, &heads, &outputs, &batch),
            Err(Error::Config(_))
        ));
        let wrong_kind = [ObjectiveSpec::new(LossKind::BinaryCrossEntropy, 0, 0)];
        assert!(matches!(
            evaluate_losses(&wrong_kind, &heads, &outputs, &batch),
            Err(Error::Config(_))
        ));
        let no_sensitive = Batch {
            features: Matrix::zeros(1, 1),
            targets: vec![TargetColumn::Classes {
                labels: vec![1],
                num_classes: 2,
            }],
            sensitive: None,
        };
        let deo = [ObjectiveSpec::new(LossKind::DeoTanh { c: 1.0 }, 0, 0)];
        assert!(matches!(
            evaluate_losses(&deo, &heads, &outputs, &no_sensitive),
            Err(Error::Config(_))
        ));
    }

    proptest::proptest! {
        #[test]
        fn losses_are_nonnegative(
            z in proptest::collection::vec(-50.0f64..50.0, 1..30),
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = z.len();
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let sensitive: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            proptest::prop_assert!(binary_cross_entropy(&z, &labels).unwrap().0 >= 0.0);
            proptest::prop_assert!(deo_tanh(&z, &labels, &sensitive, 1.0).unwrap().0 >= 0.0);
            proptest::prop_assert!(mse(&z, &vec![0.0; n]).unwrap().0 >= 0.0);
            let m = Matrix::from_vec(n, 1, z.clone()).unwrap();
            let two = Matrix::from_vec(n, 2, z.iter().flat_map(|v| [*v, -*v]).collect()).unwrap();
            let _ = m;
            proptest::prop_assert!(cross_entropy(&two, &labels).unwrap().0 >= 0.0);
        }
    }
}
