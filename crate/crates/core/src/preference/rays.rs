use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sample_dirichlet, DirichletParams, PreferenceVector};
use crate::{Error, Result};

/// Distance kept between 2D test rays and the simplex vertices.
pub const RAY_MARGIN: f64 = 0.01;

/// `count` rays `(w, 1 - w)` with `w` evenly spaced on `[margin, 1 - margin]`.
///
/// The list is built in mirrored pairs so that swapping components and
/// reversing the list gives back exactly the same rays.
pub fn test_rays_2d(count: usize) -> Result<Vec<PreferenceVector>> {
    if count < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 test rays, got {count}"
        )));
    }
    let step = (1.0 - 2.0 * RAY_MARGIN) / (count - 1) as f64;
    let mut rays = vec![None; count];
    for k in 0..count / 2 {
        let a = RAY_MARGIN + k as f64 * step;
        let b = 1.0 - a;
        rays[k] = Some(PreferenceVector::new(vec![a, b])?);
        rays[count - 1 - k] = Some(PreferenceVector::new(vec![b, a])?);
    }
    if count % 2 == 1 {
        rays[count / 2] = Some(PreferenceVector::new(vec![0.5, 0.5])?);
    }
    Ok(rays.into_iter().map(Option::unwrap).collect())
}

/// Fibonacci lattice on the positive octant of the unit sphere.
///
/// Heights are equal-area bands `z_i = 1 - (i + ½)/count`; azimuths follow
/// the golden-ratio sequence folded into `(0, π/2)`, starting from the
/// octant's diagonal. Every coordinate is strictly positive.
pub fn fibonacci_sphere_points(count: usize) -> Vec<[f64; 3]> {
    let inv_golden = 2.0 / (1.0 + 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (i as f64 + 0.5) / count as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = FRAC_PI_2 * (0.5 + i as f64 * inv_golden).fract();
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

/// Three-objective test rays: Fibonacci octant points divided by their sum.
pub fn fibonacci_sphere_rays(count: usize) -> Result<Vec<PreferenceVector>> {
    if count == 0 {
        return Err(Error::Argument("need at least one test ray".into()));
    }
    fibonacci_sphere_points(count)
        .into_iter()
        .map(|p| PreferenceVector::from_weights(p.to_vec()))
        .collect()
}

/// Uniform preference `(1/J, ..., 1/J)`.
pub fn middle_ray(dim: usize) -> Result<PreferenceVector> {
    if dim == 0 {
        return Err(Error::Argument("middle ray needs J >= 1".into()));
    }
    PreferenceVector::from_weights(vec![1.0; dim])
}

/// Deterministic evaluation rays for `dim` objectives.
///
/// One middle ray for `J = 1`, evenly spaced rays for `J = 2`, the Fibonacci
/// octant for `J = 3`, and seeded Dirichlet(1) draws beyond that.
pub fn evaluation_rays(dim: usize, count: usize, seed: u64) -> Result<Vec<PreferenceVector>> {
    match dim {
        0 => Err(Error::Argument("no objectives".into())),
        1 => Ok(vec![middle_ray(1)?]),
        2 => test_rays_2d(count),
        3 => fibonacci_sphere_rays(count),
        _ => {
            let params = DirichletParams::symmetric(1.0, dim)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..count).map(|_| sample_dirichlet(&params, &mut rng)).collect())
        }
    }
}
