//! Pareto dominance, non-dominated filtering, hypervolume and front diagnostics.

mod hypervolume;
mod mcr;

use serde::{Deserialize, Serialize};

use crate::preference::PreferenceVector;
use crate::{Error, Result};

pub use hypervolume::{
    default_reference, hypervolume, hypervolume_monte_carlo, MonteCarloEstimate,
    DEFAULT_MONTE_CARLO_SAMPLES, DEFAULT_REFERENCE_COORD,
};
pub use mcr::{mcr, predicted_labels};

/// Objective values (lower is better) and the ray that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    pub values: Vec<f64>,
    pub ray: Option<PreferenceVector>,
}

impl ObjectivePoint {
    pub fn new(values: Vec<f64>, ray: Option<PreferenceVector>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "objective point {values:?} must be non-empty and finite"
            )));
        }
        Ok(ObjectivePoint { values, ray })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

impl AsRef<[f64]> for ObjectivePoint {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Points of which none dominates another.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParetoFront {
    points: Vec<ObjectivePoint>,
}

impl ParetoFront {
    pub fn points(&self) -> &[ObjectivePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<ObjectivePoint> {
        self.points
    }
}

/// `a ≤ b` everywhere and `a < b` somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "cannot compare points of dimension {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return Ok(false);
        }
        strict |= x < y;
    }
    Ok(strict)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Indices (ascending) of the points not dominated by any other point.
///
/// Points are visited in lexicographic order, so a point can only be
/// dominated by one visited earlier, and only the survivors need checking.
pub fn nondominated_indices<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<usize>> {
    let Some(first) = points.first() else {
        return Ok(Vec::new());
    };
    let dim = first.as_ref().len();
    for p in points {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(Error::Dimension(format!(
                "mixed point dimensions {dim} and {}",
                p.len()
            )));
        }
        if p.iter().any(|v| v.is_nan()) {
            return Err(Error::Numeric("objective point contains NaN".into()));
        }
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| lex_cmp(points[i].as_ref(), points[j].as_ref()));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let p = points[i].as_ref();
        let mut dominated = false;
        for &k in &kept {
            if dominates(points[k].as_ref(), p)? {
                dominated = true;
                break;
            }
        }
        if !dominated {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    Ok(kept)
}

/// Keeps the non-dominated points in their input order.
pub fn filter_nondominated(points: Vec<ObjectivePoint>) -> Result<ParetoFront> {
    let keep = nondominated_indices(&points)?;
    let mut keep = keep.into_iter().peekable();
    let points = points
        .into_iter()
        .enumerate()
        .filter_map(|(i, p)| {
            if keep.peek() == Some(&i) {
                keep.next();
                Some(p)
            } else {
                None
            }
        })
        .collect();
    Ok(ParetoFront { points })
}

/// Largest pairwise Euclidean distance; 0 for fewer than two points.
pub fn front_spread<P: AsRef<[f64]>>(points: &[P]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d = a
                .as_ref()
                .iter()
                .zip(b.as_ref())
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            best = best.max(d);
        }
    }
    best
}
