use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use super::PreferenceVector;
use crate::{Error, Result};

/// Concentration parameters of a Dirichlet distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::Argument("Dirichlet needs at least one alpha".into()));
        }
        if let Some(bad) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::Argument(format!("alpha {bad} must be positive")));
        }
        Ok(DirichletParams { alpha })
    }

    /// `alpha_j = value` for all `j < dim`.
    pub fn symmetric(value: f64, dim: usize) -> Result<Self> {
        DirichletParams::new(vec![value; dim])
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// `alpha_i / Σ alpha`
    pub fn mean(&self) -> Vec<f64> {
        let total: f64 = self.alpha.iter().sum();
        self.alpha.iter().map(|a| a / total).collect()
    }
}

impl TryFrom<Vec<f64>> for DirichletParams {
    type Error = Error;

    fn try_from(alpha: Vec<f64>) -> Result<Self> {
        DirichletParams::new(alpha)
    }
}

impl From<DirichletParams> for Vec<f64> {
    fn from(p: DirichletParams) -> Vec<f64> {
        p.alpha
    }
}

/// Gamma(shape, 1) draw.
///
/// Marsaglia–Tsang squeeze for `shape >= 1`; for `shape < 1` a
/// Gamma(shape + 1) draw is scaled by `U^(1/shape)`.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.sample(Open01);
        return sample_gamma(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.sample(Open01);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Normalized independent Gamma(alpha_j, 1) draws.
pub fn sample_dirichlet<R: Rng + ?Sized>(params: &DirichletParams, rng: &mut R) -> PreferenceVector {
    let mut draws: Vec<f64> = params
        .alpha
        .iter()
        .map(|&a| sample_gamma(a, rng).max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = draws.iter().sum();
    for d in &mut draws {
        *d /= total;
    }
    // Tiny alphas can push a component to zero after normalization.
    if draws.iter().any(|&d| d <= 0.0) {
        for d in &mut draws {
            *d = d.max(f64::MIN_POSITIVE);
        }
    }
    PreferenceVector::from_weights(draws).expect("normalized gamma draws form a simplex point")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_invalid_alpha() {
        assert!(DirichletParams::new(vec![]).is_err());
        assert!(DirichletParams::new(vec![1.0, 0.0]).is_err());
        assert!(DirichletParams::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn gamma_moments() {
        // Mean = shape, variance = shape for Gamma(shape, 1).
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for shape in [0.3, 1.0, 2.5] {
            let n = 100_000;
            let xs: Vec<f64> = (0..n).map(|_| sample_gamma(shape, &mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            let se = (shape / n as f64).sqrt();
            assert!((mean - shape).abs() < 4.0 * se, "shape {shape}: mean {mean}");
            assert!((var - shape).abs() / shape < 0.05, "shape {shape}: var {var}");
        }
    }

    #[test]
    fn small_alpha_stays_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = DirichletParams::new(vec![0.05, 0.05, 0.05]).unwrap();
        for _ in 0..10_000 {
            let r = sample_dirichlet(&p, &mut rng);
            assert!(r.as_slice().iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn reproducible_with_seed() {
        let p = DirichletParams::new(vec![0.5, 1.5]).unwrap();
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            (0..20).map(|_| sample_dirichlet(&p, &mut rng)).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            (0..20).map(|_| sample_dirichlet(&p, &mut rng)).collect()
        };
        assert_eq!(a, b);
    }
}
