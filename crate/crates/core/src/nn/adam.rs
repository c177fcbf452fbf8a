use serde::{Deserialize, Serialize};

use super::{Mlp, ParamGrads};
use crate::{Error, Result};

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment buffers and step counter of the Adam optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    params: AdamParams,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    /// Allocates zeroed moments shaped like `shapes` (one length per tensor).
    pub fn new(params: AdamParams, shapes: &[usize]) -> Self {
        AdamState {
            params,
            step: 0,
            first: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn for_model(params: AdamParams, model: &Mlp) -> Self {
        let shapes: Vec<usize> = model
            .weights()
            .iter()
            .zip(model.biases())
            .flat_map(|(w, b)| [w.as_slice().len(), b.len()])
            .collect();
        AdamState::new(params, &shapes)
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn params(&self) -> AdamParams {
        self.params
    }

    /// One bias-corrected Adam update over a list of tensors.
    ///
    /// Nothing is modified when a gradient is non-finite.
    pub fn update(&mut self, tensors: &mut [&mut [f64]], grads: &[&[f64]], lr: f64) -> Result<()> {
        if tensors.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::Dimension(format!(
                "optimizer tracks {} tensors, got {} parameters and {} gradients",
                self.first.len(),
                tensors.len(),
                grads.len()
            )));
        }
        for (i, ((t, g), m)) in tensors.iter().zip(grads).zip(&self.first).enumerate() {
            if t.len() != m.len() || g.len() != m.len() {
                return Err(Error::Dimension(format!(
                    "tensor {i}: expected {} values, got {} parameters and {} gradients",
                    m.len(),
                    t.len(),
                    g.len()
                )));
            }
        }
        if let Some(bad) = grads.iter().flat_map(|g| g.iter()).find(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!("non-finite gradient {bad}")));
        }

        self.step += 1;
        let AdamParams { beta1, beta2, eps } = self.params;
        let bias1 = 1.0 - beta1.powf(self.step as f64);
        let bias2 = 1.0 - beta2.powf(self.step as f64);
        for (((tensor, grad), m), v) in tensors
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            for (((p, &g), m), v) in tensor.iter_mut().zip(grad.iter()).zip(m).zip(v) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }

    pub fn step(&mut self, model: &mut Mlp, grads: &ParamGrads, lr: f64) -> Result<()> {
        let grads = grads.tensors();
        let mut tensors = model.tensors_mut();
        self.update(&mut tensors, &grads, lr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grads_leave_params_unchanged() {
        let mut state = AdamState::new(AdamParams::default(), &[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        state
            .update(&mut [p.as_mut_slice()], &[&[0.0, 0.0, 0.0]], 1e-3)
            .unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m̂ = v̂ = 1 after one step with g = 1, so the update is lr / (1 + eps).
        let lr = 1e-3;
        let mut state = AdamState::new(AdamParams::default(), &[1]);
        let mut p = vec![0.0];
        state.update(&mut [p.as_mut_slice()], &[&[1.0]], lr).unwrap();
        assert!((p[0] + lr / (1.0 + 1e-8)).abs() < 1e-18);
        // With a constant gradient every bias-corrected step is the same size.
        for _ in 0..4 {
            let before = p[0];
            state.update(&mut [p.as_mut_slice()], &[&[1.0]], lr).unwrap();
            assert!(((before - p[0]) - lr).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_lr_is_a_no_op() {
        let mut state = AdamState::new(AdamParams::default(), &[2]);
        let mut p = vec![0.3, 0.4];
        state.update(&mut [p.as_mut_slice()], &[&[5.0, -1.0]], 0.0).unwrap();
        assert_eq!(p, vec![0.3, 0.4]);
    }

    #[test]
    fn non_finite_grads_are_rejected_untouched() {
        let mut state = AdamState::new(AdamParams::default(), &[2]);
        let mut p = vec![0.3, 0.4];
        let err = state
            .update(&mut [p.as_mut_slice()], &[&[1.0, f64::NAN]], 0.1)
            .unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
        assert_eq!(p, vec![0.3, 0.4]);
        assert_eq!(state.step_count(), 0);
    }

    #[test]
    fn shape_mismatch() {
        let mut state = AdamState::new(AdamParams::default(), &[2]);
        let mut p = vec![0.3];
        assert!(state.update(&mut [p.as_mut_slice()], &[&[1.0]], 0.1).is_err());
    }
}
