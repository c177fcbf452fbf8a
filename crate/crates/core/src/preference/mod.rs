//! Preference vectors: Dirichlet sampling, deterministic test rays and input fusion.

mod dirichlet;
mod rays;

use serde::{Deserialize, Serialize};

use crate::nn::Matrix;
use crate::{Error, Result};

pub use dirichlet::{sample_dirichlet, sample_gamma, DirichletParams};
pub use rays::{
    evaluation_rays, fibonacci_sphere_rays, fibonacci_sphere_points, middle_ray, test_rays_2d,
    RAY_MARGIN,
};

/// Tolerance on `Σ r_j = 1`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Strictly positive point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PreferenceVector(Vec<f64>);

impl PreferenceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("preference vector is empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Argument(format!(
                "preference component {bad} must be positive"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Argument(format!(
                "preference components sum to {sum}, not 1"
            )));
        }
        Ok(PreferenceVector(values))
    }

    /// Normalizes positive weights onto the simplex.
    pub fn from_weights(mut weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Argument(format!(
                "weights {weights:?} must all be positive"
            )));
        }
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        PreferenceVector::new(weights)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for PreferenceVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        PreferenceVector::new(values)
    }
}

impl From<PreferenceVector> for Vec<f64> {
    fn from(r: PreferenceVector) -> Vec<f64> {
        r.0
    }
}

impl AsRef<[f64]> for PreferenceVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Appends the components of `r` to every row of `features`.
pub fn fuse(features: &Matrix, r: &PreferenceVector) -> Matrix {
    let (rows, cols) = features.shape();
    let width = cols + r.dim();
    let mut data = Vec::with_capacity(rows * width);
    for i in 0..rows {
        data.extend_from_slice(features.row(i));
        data.extend_from_slice(r.as_slice());
    }
    Matrix::from_vec(rows, width, data).expect("fused rows have consistent width")
}
