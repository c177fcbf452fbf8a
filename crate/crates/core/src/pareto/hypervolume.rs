use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nondominated_indices;
use crate::{Error, Result};

/// Reference coordinate used when none is given.
pub const DEFAULT_REFERENCE_COORD: f64 = 2.0;
/// Default sample count for the Monte Carlo estimator.
pub const DEFAULT_MONTE_CARLO_SAMPLES: usize = 1_000_000;
const MONTE_CARLO_CHUNKS: u64 = 64;

pub fn default_reference(dim: usize) -> Vec<f64> {
    vec![DEFAULT_REFERENCE_COORD; dim]
}

/// Monte Carlo hypervolume with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Points strictly inside the reference box; the rest contribute nothing.
fn clip<P: AsRef<[f64]>>(points: &[P], reference: &[f64]) -> Result<Vec<Vec<f64>>> {
    if reference.is_empty() {
        return Err(Error::Dimension("reference point is empty".into()));
    }
    let mut inside = Vec::new();
    for p in points {
        let p = p.as_ref();
        if p.len() != reference.len() {
            return Err(Error::Dimension(format!(
                "point of dimension {} against reference of dimension {}",
                p.len(),
                reference.len()
            )));
        }
        if p.iter().any(|v| v.is_nan()) {
            return Err(Error::Numeric("objective point contains NaN".into()));
        }
        if p.iter().zip(reference).all(|(v, r)| v < r) {
            inside.push(p.to_vec());
        }
    }
    Ok(inside)
}

fn sweep_2d(points: &mut [Vec<f64>], reference: &[f64]) -> f64 {
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut floor = reference[1];
    for p in points.iter() {
        if p[1] < floor {
            area += (reference[0] - p[0]) * (floor - p[1]);
            floor = p[1];
        }
    }
    area
}

fn slice_3d(points: &mut [Vec<f64>], reference: &[f64]) -> f64 {
    points.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut volume = 0.0;
    let mut active: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for (k, p) in points.iter().enumerate() {
        active.push(p.clone());
        let top = points.get(k + 1).map_or(reference[2], |q| q[2]);
        let depth = top - p[2];
        if depth > 0.0 {
            volume += depth * sweep_2d(&mut active, reference);
        }
    }
    volume
}

/// Exact hypervolume dominated by `points` inside the box bounded by `reference`.
///
/// Supports `J <= 3`; higher dimensions need [`hypervolume_monte_carlo`].
/// Dominated points are dropped first, so they never change the result.
pub fn hypervolume<P: AsRef<[f64]>>(points: &[P], reference: &[f64]) -> Result<f64> {
    let inside = clip(points, reference)?;
    let mut inside: Vec<Vec<f64>> = nondominated_indices(&inside)?
        .into_iter()
        .map(|i| inside[i].clone())
        .collect();
    match reference.len() {
        1 => Ok(inside
            .iter()
            .map(|p| reference[0] - p[0])
            .fold(0.0, f64::max)),
        2 => Ok(sweep_2d(&mut inside, reference)),
        3 => Ok(slice_3d(&mut inside, reference)),
        j => Err(Error::Usage(format!(
            "exact hypervolume is only computed for J <= 3 (got J = {j}); request Monte Carlo"
        ))),
    }
}

/// Uniform sampling of the box `[min(points), reference]`.
///
/// Samples are split into fixed seeded chunks, so the estimate does not depend
/// on the number of threads.
pub fn hypervolume_monte_carlo<P: AsRef<[f64]> + Sync>(
    points: &[P],
    reference: &[f64],
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(Error::Argument("Monte Carlo needs at least one sample".into()));
    }
    let inside = clip(points, reference)?;
    if inside.is_empty() {
        return Ok(MonteCarloEstimate {
            value: 0.0,
            std_error: 0.0,
            samples,
        });
    }
    let dim = reference.len();
    let lower: Vec<f64> = (0..dim)
        .map(|j| inside.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let box_volume: f64 = lower.iter().zip(reference).map(|(l, r)| r - l).product();

    let chunks = MONTE_CARLO_CHUNKS.min(samples as u64);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let n = samples as u64 / chunks + u64::from(chunk < samples as u64 % chunks);
            let mut x = vec![0.0; dim];
            let mut hits = 0u64;
            for _ in 0..n {
                for (j, xj) in x.iter_mut().enumerate() {
                    *xj = rng.random_range(lower[j]..reference[j]);
                }
                if inside.iter().any(|p| p.iter().zip(&x).all(|(a, b)| a <= b)) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(MonteCarloEstimate {
        value: box_volume * p,
        std_error: box_volume * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_oracle(points: &[Vec<f64>], reference: &[f64], n: usize) -> f64 {
        // Midpoint grid over [0, ref]^2.
        let (hx, hy) = (reference[0] / n as f64, reference[1] / n as f64);
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                let x = [(i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy];
                if points.iter().any(|p| p[0] <= x[0] && p[1] <= x[1]) {
                    count += 1;
                }
            }
        }
        count as f64 * hx * hy
    }

    #[test]
    fn unit_square() {
        assert_eq!(hypervolume(&[vec![1.0, 1.0]], &[2.0, 2.0]).unwrap(), 1.0);
    }

    #[test]
    fn dominated_point_adds_nothing() {
        let hv = hypervolume(&[vec![1.0, 1.0], vec![1.5, 1.5]], &[2.0, 2.0]).unwrap();
        assert_eq!(hv, 1.0);
    }

    #[test]
    fn two_staggered_points() {
        let pts = vec![vec![0.5, 1.5], vec![1.5, 0.5]];
        let hv = hypervolume(&pts, &[2.0, 2.0]).unwrap();
        assert!((hv - 1.25).abs() < 1e-15);
        assert!((grid_oracle(&pts, &[2.0, 2.0], 400) - 1.25).abs() < 1e-9);
    }

    #[test]
    fn outside_points_contribute_zero() {
        let hv = hypervolume(&[vec![2.5, 0.0], vec![1.0, 2.0]], &[2.0, 2.0]).unwrap();
        assert_eq!(hv, 0.0);
        assert_eq!(hypervolume::<Vec<f64>>(&[], &[2.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn one_and_three_dimensions() {
        assert_eq!(hypervolume(&[vec![0.5], vec![1.0]], &[2.0]).unwrap(), 1.5);
        assert_eq!(hypervolume(&[vec![1.0, 1.0, 1.0]], &[2.0, 2.0, 2.0]).unwrap(), 1.0);
        // Two unit cubes overlapping in a 0.5-thick slab: 1 + 1 - 0.5.
        let pts = vec![vec![0.0, 0.0, 0.5], vec![0.0, 0.0, 0.0]];
        assert_eq!(hypervolume(&pts, &[1.0, 1.0, 1.0]).unwrap(), 1.0);
        let pts = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        // Inclusion–exclusion: 3·2 − 3·1 + 1.
        assert_eq!(hypervolume(&pts, &[2.0, 2.0, 2.0]).unwrap(), 4.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            hypervolume(&[vec![1.0, 1.0]], &[2.0, 2.0, 2.0]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            hypervolume(&[vec![1.0; 4]], &[2.0; 4]),
            Err(Error::Usage(_))
        ));
        assert!(hypervolume_monte_carlo(&[vec![1.0]], &[2.0], 0, 0).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic_and_close() {
        let pts = vec![vec![0.5, 1.5], vec![1.5, 0.5]];
        let a = hypervolume_monte_carlo(&pts, &[2.0, 2.0], 200_000, 9).unwrap();
        let b = hypervolume_monte_carlo(&pts, &[2.0, 2.0], 200_000, 9).unwrap();
        assert_eq!(a, b);
        assert!((a.value - 1.25).abs() < 3.0 * a.std_error);
    }

    #[test]
    fn monte_carlo_in_four_dimensions() {
        let pts = vec![vec![1.0; 4]];
        let est = hypervolume_monte_carlo(&pts, &[2.0; 4], 10_000, 1).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.std_error, 0.0);
    }
}
