#![allow(dead_code)]

use cosmos_core::data::{Batch, TargetColumn};
use cosmos_core::nn::{Matrix, Mlp, OutputHeads};
use cosmos_core::objectives::{evaluate_losses, LossKind, ObjectiveSpec};
use cosmos_core::preference::{fuse, sample_dirichlet, DirichletParams, PreferenceVector};
use cosmos_core::train::scalarized_loss;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A network, a batch, a ray and a penalty weight for gradient checks.
pub struct GradientCase {
    pub mlp: Mlp,
    pub batch: Batch,
    pub specs: Vec<ObjectiveSpec>,
    pub ray: PreferenceVector,
    pub lambda: f64,
}

/// Random case mixing every loss kind: softmax head, single-logit head with
/// BCE and DEO, and a regression head.
pub fn random_case(seed: u64) -> GradientCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.random_range(4..12);
    let features = rng.random_range(1..5);
    let classes = rng.random_range(2..4);
    let heads = OutputHeads::new(vec![classes, 1, 1]).unwrap();
    let specs = vec![
        ObjectiveSpec::new(LossKind::CrossEntropy, 0, 0),
        ObjectiveSpec::new(LossKind::BinaryCrossEntropy, 1, 1),
        ObjectiveSpec::new(LossKind::DeoTanh { c: 1.0 }, 1, 1),
        ObjectiveSpec::new(LossKind::Mse, 2, 2),
    ];
    let j = rng.random_range(2..=4);
    let specs: Vec<ObjectiveSpec> = specs.into_iter().take(j).collect();
    let hidden = rng.random_range(3..8);
    let dims = vec![features + j, hidden, rng.random_range(3..6), heads.total_width()];
    let mut mlp = Mlp::new(dims, heads, &mut rng).unwrap();
    // Non-zero biases keep outputs off the ReLU and max(0, ·) kinks, where
    // central differences are meaningless.
    let jittered: Vec<f64> = mlp
        .flat_parameters()
        .iter()
        .map(|p| p + rng.random_range(-0.5..0.5))
        .collect();
    mlp.set_flat_parameters(&jittered).unwrap();
    let x = Matrix::from_vec(
        rows,
        features,
        (0..rows * features).map(|_| rng.random_range(-1.5..1.5)).collect(),
    )
    .unwrap();
    let batch = Batch {
        features: x,
        targets: vec![
            TargetColumn::Classes {
                labels: (0..rows).map(|_| rng.random_range(0..classes)).collect(),
                num_classes: classes,
            },
            TargetColumn::Classes {
                // Half positives in each group keeps DEO away from empty groups.
                labels: (0..rows).map(|i| usize::from(i % 4 < 2)).collect(),
                num_classes: 2,
            },
            TargetColumn::Real((0..rows).map(|_| rng.random_range(-1.0..1.0)).collect()),
        ],
        sensitive: Some((0..rows).map(|i| (i % 2) as u8).collect()),
    };
    let ray = sample_dirichlet(&DirichletParams::symmetric(1.0, j).unwrap(), &mut rng);
    GradientCase {
        mlp,
        batch,
        specs,
        ray,
        lambda: rng.random_range(0.0..3.0),
    }
}

pub fn total_loss(case: &GradientCase, mlp: &Mlp) -> f64 {
    let (out, _) = mlp.forward(&fuse(&case.batch.features, &case.ray)).unwrap();
    let eval = evaluate_losses(&case.specs, mlp.heads(), &out, &case.batch).unwrap();
    scalarized_loss(&case.ray, &eval.losses, case.lambda).unwrap().total
}

/// Gradient of the penalized scalarization with one backward pass.
pub fn analytic_gradient(case: &GradientCase) -> Vec<f64> {
    let (out, cache) = case.mlp.forward(&fuse(&case.batch.features, &case.ray)).unwrap();
    let eval = evaluate_losses(&case.specs, case.mlp.heads(), &out, &case.batch).unwrap();
    let s = scalarized_loss(&case.ray, &eval.losses, case.lambda).unwrap();
    let cot = eval.combine_grads(&s.grad).unwrap();
    case.mlp.backward(&cache, &cot).unwrap().flatten()
}

/// Central differences over every parameter.
pub fn numeric_gradient(case: &GradientCase, h: f64) -> Vec<f64> {
    let base = case.mlp.flat_parameters();
    let mut probe = case.mlp.clone();
    (0..base.len())
        .map(|i| {
            let mut p = base.clone();
            p[i] += h;
            probe.set_flat_parameters(&p).unwrap();
            let up = total_loss(case, &probe);
            p[i] -= 2.0 * h;
            probe.set_flat_parameters(&p).unwrap();
            let down = total_loss(case, &probe);
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest componentwise `|a - b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Points on the analytic regression front at the ideal λ = 0 predictor:
/// `ℓ = ((r₂ g)², (r₁ g)²)`.
pub fn ideal_regression_loss(ray: &[f64], gap: f64) -> [f64; 2] {
    [(ray[1] * gap).powi(2), (ray[0] * gap).powi(2)]
}

/// HV of the continuous front `√ℓ₁ + √ℓ₂ = g` against (2, 2), valid for `g ≤ √2`:
/// `4 - ∫₀^{g²} (g - √u)² du = 4 - g⁴/6`.
pub fn analytic_front_hv(gap: f64) -> f64 {
    4.0 - gap.powi(4) / 6.0
}

/// RMS of `√ℓ₁ + √ℓ₂ - g` over the points.
pub fn front_residual_rms<P: AsRef<[f64]>>(points: &[P], gap: f64) -> f64 {
    let sum: f64 = points
        .iter()
        .map(|p| (p.as_ref()[0].sqrt() + p.as_ref()[1].sqrt() - gap).powi(2))
        .sum();
    (sum / points.len() as f64).sqrt()
}
