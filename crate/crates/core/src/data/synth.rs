use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, TargetColumn};
use crate::nn::Matrix;
use crate::{Error, Result};

/// Bi-objective regression whose Pareto front is known in closed form.
///
/// Inputs are uniform on `[-1, 1]^dim`. The two targets are
/// `y1 = g(x) - gap/2` and `y2 = g(x) + gap/2`; with MSE to each, a predictor
/// `f = y1 + t·gap` attains losses `(t²·gap², (1-t)²·gap²)`, so the front is
/// `√ℓ1 + √ℓ2 = gap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionSynth {
    pub n: usize,
    pub dim: usize,
    pub gap: f64,
    pub seed: u64,
}

impl Default for RegressionSynth {
    fn default() -> Self {
        RegressionSynth {
            n: 2000,
            dim: 2,
            gap: 1.0,
            seed: 0,
        }
    }
}

impl RegressionSynth {
    pub fn new(n: usize, seed: u64) -> Self {
        RegressionSynth {
            n,
            seed,
            ..Default::default()
        }
    }

    /// Shared component of both targets.
    pub fn signal(x: &[f64]) -> f64 {
        let rest = if x.len() > 1 {
            x[1..].iter().sum::<f64>() / (x.len() - 1) as f64
        } else {
            0.0
        };
        0.5 * (2.0 * x[0]).sin() + 0.3 * rest
    }
}

pub fn synth_biobjective_regression(cfg: &RegressionSynth) -> Result<Dataset> {
    if cfg.dim == 0 {
        return Err(Error::Argument("regression needs dim >= 1".into()));
    }
    if !(cfg.gap.is_finite() && cfg.gap >= 0.0) {
        return Err(Error::Argument(format!("gap {} is invalid", cfg.gap)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = Vec::with_capacity(cfg.n * cfg.dim);
    let mut y1 = Vec::with_capacity(cfg.n);
    let mut y2 = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let x: Vec<f64> = (0..cfg.dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let g = RegressionSynth::signal(&x);
        y1.push(g - 0.5 * cfg.gap);
        y2.push(g + 0.5 * cfg.gap);
        data.extend(x);
    }
    Dataset::new(
        Matrix::from_vec(cfg.n, cfg.dim, data)?,
        vec![TargetColumn::Real(y1), TargetColumn::Real(y2)],
        None,
    )
}

/// Binary classification with a binary sensitive attribute.
///
/// Group `a` shifts the first feature by `±disparity`; labels follow
/// `P(y=1|x) = σ(signal · (x0 + x1/2))`. With `disparity = 0` the groups are
/// exchangeable, with `signal = 0` labels are independent fair coin flips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FairnessSynth {
    pub n: usize,
    pub dim: usize,
    pub disparity: f64,
    pub signal: f64,
    pub seed: u64,
}

impl Default for FairnessSynth {
    fn default() -> Self {
        FairnessSynth {
            n: 4000,
            dim: 4,
            disparity: 1.0,
            signal: 3.0,
            seed: 0,
        }
    }
}

impl FairnessSynth {
    pub fn new(n: usize, disparity: f64, seed: u64) -> Self {
        FairnessSynth {
            n,
            disparity,
            seed,
            ..Default::default()
        }
    }
}

pub fn synth_fairness(cfg: &FairnessSynth) -> Result<Dataset> {
    if cfg.dim < 2 {
        return Err(Error::Argument("fairness data needs dim >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = Vec::with_capacity(cfg.n * cfg.dim);
    let mut labels = Vec::with_capacity(cfg.n);
    let mut sensitive = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let a: u8 = rng.random_range(0..2);
        let mut x: Vec<f64> = (0..cfg.dim).map(|_| rng.sample(StandardNormal)).collect();
        x[0] += cfg.disparity * (2.0 * a as f64 - 1.0);
        let p = 1.0 / (1.0 + (-cfg.signal * (x[0] + 0.5 * x[1])).exp());
        labels.push(usize::from(rng.random::<f64>() < p));
        sensitive.push(a);
        data.extend(x);
    }
    Dataset::new(
        Matrix::from_vec(cfg.n, cfg.dim, data)?,
        vec![TargetColumn::Classes {
            labels,
            num_classes: 2,
        }],
        Some(sensitive),
    )
}

/// Several classification tasks on shared Gaussian inputs.
///
/// Task `t` labels each row with `argmax(x·P_t + noise)` for a seeded random
/// projection `P_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultitaskSynth {
    pub n: usize,
    pub dim: usize,
    pub classes: Vec<usize>,
    pub noise: f64,
    pub seed: u64,
}

impl Default for MultitaskSynth {
    fn default() -> Self {
        MultitaskSynth {
            n: 3000,
            dim: 6,
            classes: vec![3, 2],
            noise: 0.3,
            seed: 0,
        }
    }
}

pub fn synth_multitask_classification(cfg: &MultitaskSynth) -> Result<Dataset> {
    if cfg.dim == 0 || cfg.classes.is_empty() || cfg.classes.iter().any(|&k| k < 2) {
        return Err(Error::Argument(
            "multitask data needs dim >= 1 and at least two classes per task".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let projections: Vec<Vec<f64>> = cfg
        .classes
        .iter()
        .map(|&k| (0..cfg.dim * k).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let mut data = Vec::with_capacity(cfg.n * cfg.dim);
    let mut labels: Vec<Vec<usize>> = vec![Vec::with_capacity(cfg.n); cfg.classes.len()];
    for _ in 0..cfg.n {
        let x: Vec<f64> = (0..cfg.dim).map(|_| rng.sample(StandardNormal)).collect();
        for (t, &k) in cfg.classes.iter().enumerate() {
            let mut best = (0, f64::NEG_INFINITY);
            for c in 0..k {
                let noise: f64 = rng.sample(StandardNormal);
                let score = (0..cfg.dim)
                    .map(|i| x[i] * projections[t][i * k + c])
                    .sum::<f64>()
                    + cfg.noise * noise;
                if score > best.1 {
                    best = (c, score);
                }
            }
            labels[t].push(best.0);
        }
        data.extend(x);
    }
    let targets = labels
        .into_iter()
        .zip(&cfg.classes)
        .map(|(labels, &num_classes)| TargetColumn::Classes {
            labels,
            num_classes,
        })
        .collect();
    Dataset::new(Matrix::from_vec(cfg.n, cfg.dim, data)?, targets, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reals(t: &TargetColumn) -> &[f64] {
        match t {
            TargetColumn::Real(v) => v,
            _ => panic!("expected real targets"),
        }
    }

    #[test]
    fn empty_regression() {
        let d = synth_biobjective_regression(&RegressionSynth::new(0, 1)).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.targets().len(), 2);
    }

    #[test]
    fn regression_gap_is_exact() {
        let cfg = RegressionSynth {
            gap: 0.8,
            ..RegressionSynth::new(300, 4)
        };
        let d = synth_biobjective_regression(&cfg).unwrap();
        let (y1, y2) = (reals(&d.targets()[0]), reals(&d.targets()[1]));
        assert!(y1.iter().zip(y2).all(|(a, b)| ((b - a) - 0.8).abs() < 1e-12));
        assert!(d.features().as_slice().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn zero_gap_targets_coincide() {
        let cfg = RegressionSynth {
            gap: 0.0,
            ..RegressionSynth::new(50, 4)
        };
        let d = synth_biobjective_regression(&cfg).unwrap();
        assert_eq!(d.targets()[0], d.targets()[1]);
    }

    #[test]
    fn pointwise_optimum_is_weighted_target() {
        // Minimizer of r1 (f - y1)^2 + r2 (f - y2)^2 by a dense grid search.
        let (y1, y2) = (-0.3, 0.7);
        for r1 in [0.1, 0.25, 0.5, 0.9] {
            let r2 = 1.0 - r1;
            let best = (0..=200_000)
                .map(|i| -1.0 + 2.0 * i as f64 / 200_000.0)
                .min_by(|a, b| {
                    let fa = r1 * (a - y1) * (a - y1) + r2 * (a - y2) * (a - y2);
                    let fb = r1 * (b - y1) * (b - y1) + r2 * (b - y2) * (b - y2);
                    fa.total_cmp(&fb)
                })
                .unwrap();
            assert!((best - (r1 * y1 + r2 * y2)).abs() < 1e-5);
        }
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let a = synth_fairness(&FairnessSynth::new(200, 1.0, 9)).unwrap();
        let b = synth_fairness(&FairnessSynth::new(200, 1.0, 9)).unwrap();
        assert_eq!(a, b);
        let c = synth_multitask_classification(&MultitaskSynth::default()).unwrap();
        let d = synth_multitask_classification(&MultitaskSynth::default()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn fairness_without_signal_has_coin_flip_labels() {
        let cfg = FairnessSynth {
            signal: 0.0,
            ..FairnessSynth::new(20_000, 1.0, 2)
        };
        let d = synth_fairness(&cfg).unwrap();
        let TargetColumn::Classes { labels, .. } = &d.targets()[0] else {
            panic!()
        };
        let rate = labels.iter().sum::<usize>() as f64 / labels.len() as f64;
        assert!((rate - 0.5).abs() < 0.02, "positive rate {rate}");
    }

    #[test]
    fn multitask_labels_in_range() {
        let d = synth_multitask_classification(&MultitaskSynth::default()).unwrap();
        assert_eq!(d.targets().len(), 2);
        for (t, k) in d.targets().iter().zip([3, 2]) {
            let TargetColumn::Classes {
                labels,
                num_classes,
            } = t
            else {
                panic!()
            };
            assert_eq!(*num_classes, k);
            assert!(labels.iter().all(|&l| l < k));
            // Every class occurs.
            assert!((0..k).all(|c| labels.contains(&c)));
        }
    }
}
