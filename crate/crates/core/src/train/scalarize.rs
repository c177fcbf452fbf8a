use crate::objectives::LossVector;
use crate::preference::PreferenceVector;
use crate::{Error, Result};

/// Penalized linear scalarization and its gradient with respect to the losses.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarizedLoss {
    /// `linear_term - λ·cos_term`
    pub total: f64,
    /// `rᵀℓ`
    pub linear_term: f64,
    pub cos_term: f64,
    /// `∂total/∂ℓ`
    pub grad: Vec<f64>,
}

fn check(r: &PreferenceVector, l: &LossVector) -> Result<()> {
    if r.dim() != l.dim() {
        return Err(Error::Dimension(format!(
            "ray has {} components, loss vector {}",
            r.dim(),
            l.dim()
        )));
    }
    Ok(())
}

/// `rᵀℓ / (‖r‖‖ℓ‖)`, taken as 1 when `ℓ = 0`.
pub fn cosine_similarity(r: &PreferenceVector, l: &LossVector) -> Result<f64> {
    check(r, l)?;
    let ln = l.norm();
    if ln == 0.0 {
        return Ok(1.0);
    }
    let dot: f64 = r.as_slice().iter().zip(l.as_slice()).map(|(a, b)| a * b).sum();
    Ok(dot / (r.norm() * ln))
}

/// `rᵀℓ - λ·cos(r, ℓ)` with the closed-form gradient
/// `r - λ[r/(‖r‖‖ℓ‖) - (rᵀℓ)ℓ/(‖r‖‖ℓ‖³)]`.
pub fn scalarized_loss(r: &PreferenceVector, l: &LossVector, lambda: f64) -> Result<ScalarizedLoss> {
    check(r, l)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Argument(format!("penalty weight {lambda} must be >= 0")));
    }
    let rs = r.as_slice();
    let ls = l.as_slice();
    let linear_term: f64 = rs.iter().zip(ls).map(|(a, b)| a * b).sum();
    let ln = l.norm();
    let mut grad = rs.to_vec();
    let cos_term = if ln == 0.0 {
        1.0
    } else {
        let rn = r.norm();
        let denom = rn * ln;
        if lambda > 0.0 {
            let tail = linear_term / (rn * ln * ln * ln);
            for ((g, ri), li) in grad.iter_mut().zip(rs).zip(ls) {
                *g -= lambda * (ri / denom - tail * li);
            }
        }
        linear_term / denom
    };
    Ok(ScalarizedLoss {
        total: linear_term - lambda * cos_term,
        linear_term,
        cos_term,
        grad,
    })
}
