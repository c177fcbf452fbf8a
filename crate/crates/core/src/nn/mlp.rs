use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::{Error, Result};

/// Partition of the output layer into per-objective blocks.
///
/// Objectives that share an output (accuracy and fairness on one logit) point
/// at the same head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputHeads {
    widths: Vec<usize>,
}

impl OutputHeads {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if widths.is_empty() || widths.contains(&0) {
            return Err(Error::Config(format!(
                "output heads must be non-empty with positive widths, got {widths:?}"
            )));
        }
        Ok(OutputHeads { widths })
    }

    /// A single head covering the whole output.
    pub fn single(width: usize) -> Self {
        OutputHeads {
            widths: vec![width.max(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widths.is_empty()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn width(&self, head: usize) -> Option<usize> {
        self.widths.get(head).copied()
    }

    pub fn total_width(&self) -> usize {
        self.widths.iter().sum()
    }

    /// Column range of `head` inside the output matrix.
    pub fn range(&self, head: usize) -> Option<Range<usize>> {
        let width = *self.widths.get(head)?;
        let start: usize = self.widths[..head].iter().sum();
        Some(start..start + width)
    }
}

/// Activations recorded by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[l]` is the input to layer `l` (the batch itself for `l = 0`).
    inputs: Vec<Matrix>,
    /// Pre-activation of every layer.
    pre_activations: Vec<Matrix>,
}

impl ForwardCache {
    pub fn layer_inputs(&self) -> &[Matrix] {
        &self.inputs
    }

    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre_activations
    }
}

/// Gradients shaped like the parameters of an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl ParamGrads {
    /// Tensors in parameter order: `w0, b0, w1, b1, ...`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Dense feed-forward network: ReLU on hidden layers, raw logits out.
///
/// Weights of layer `l` are stored as an `in × out` matrix so a batch is
/// propagated as `X·W + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_dims: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    heads: OutputHeads,
}

fn check_dims(layer_dims: &[usize], heads: &OutputHeads) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::Config(
            "an MLP needs at least input and output dimensions".into(),
        ));
    }
    if layer_dims.contains(&0) {
        return Err(Error::Config(format!(
            "layer dimensions must be positive, got {layer_dims:?}"
        )));
    }
    let out = *layer_dims.last().unwrap();
    if heads.total_width() != out {
        return Err(Error::Config(format!(
            "heads {:?} cover {} outputs but the output layer has {out}",
            heads.widths(),
            heads.total_width()
        )));
    }
    Ok(())
}

impl Mlp {
    /// He-uniform initialization scaled by fan-in; biases start at zero.
    pub fn new<R: Rng + ?Sized>(
        layer_dims: Vec<usize>,
        heads: OutputHeads,
        rng: &mut R,
    ) -> Result<Self> {
        check_dims(&layer_dims, &heads)?;
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            weights.push(Matrix::from_vec(fan_in, fan_out, data)?);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Mlp {
            layer_dims,
            weights,
            biases,
            heads,
        })
    }

    pub fn zeros(layer_dims: Vec<usize>, heads: OutputHeads) -> Result<Self> {
        check_dims(&layer_dims, &heads)?;
        let weights = layer_dims
            .windows(2)
            .map(|p| Matrix::zeros(p[0], p[1]))
            .collect();
        let biases = layer_dims[1..].iter().map(|&d| vec![0.0; d]).collect();
        Ok(Mlp {
            layer_dims,
            weights,
            biases,
            heads,
        })
    }

    pub fn from_parameters(
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
        heads: OutputHeads,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::Config(
                "need one bias vector per weight matrix".into(),
            ));
        }
        let mut layer_dims = vec![weights[0].rows()];
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.rows() != *layer_dims.last().unwrap() || b.len() != w.cols() {
                return Err(Error::Dimension(format!(
                    "layer {l}: weight {}x{} and bias {} do not chain",
                    w.rows(),
                    w.cols(),
                    b.len()
                )));
            }
            layer_dims.push(w.cols());
        }
        check_dims(&layer_dims, &heads)?;
        Ok(Mlp {
            layer_dims,
            weights,
            biases,
            heads,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn heads(&self) -> &OutputHeads {
        &self.heads
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn parameter_count(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.as_slice().len() + b.len())
            .sum()
    }

    /// Mutable tensors in parameter order: `w0, b0, w1, b1, ...`.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    pub fn flat_parameters(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.as_slice().iter().chain(b.iter()).copied())
            .collect()
    }

    pub fn set_flat_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::Dimension(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                values.len()
            )));
        }
        let mut offset = 0;
        for tensor in self.tensors_mut() {
            let n = tensor.len();
            tensor.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    fn check_batch(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "batch has {} columns but the model expects {}",
                batch.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn affine(&self, layer: usize, input: &Matrix) -> Result<Matrix> {
        let mut z = input.matmul(&self.weights[layer])?;
        let bias = &self.biases[layer];
        for i in 0..z.rows() {
            for (v, b) in z.row_mut(i).iter_mut().zip(bias) {
                *v += b;
            }
        }
        Ok(z)
    }

    /// Forward pass that records the activations needed by [`Mlp::backward`].
    pub fn forward(&self, batch: &Matrix) -> Result<(Matrix, ForwardCache)> {
        self.check_batch(batch)?;
        let mut inputs = Vec::with_capacity(self.num_layers());
        let mut pre_activations = Vec::with_capacity(self.num_layers());
        let mut current = batch.clone();
        for l in 0..self.num_layers() {
            let z = self.affine(l, &current)?;
            let next = if l + 1 < self.num_layers() {
                relu(&z)
            } else {
                z.clone()
            };
            inputs.push(std::mem::replace(&mut current, next));
            pre_activations.push(z);
        }
        Ok((
            current,
            ForwardCache {
                inputs,
                pre_activations,
            },
        ))
    }

    /// Forward pass without recording activations. Read-only on `self`.
    pub fn predict(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_batch(batch)?;
        let mut current = self.affine(0, batch)?;
        for l in 1..self.num_layers() {
            current = self.affine(l, &relu(&current))?;
        }
        Ok(current)
    }

    /// Backpropagates `output_grad` (∂loss/∂outputs) into parameter gradients.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<ParamGrads> {
        if cache.inputs.len() != self.num_layers()
            || cache.pre_activations.len() != self.num_layers()
            || cache
                .pre_activations
                .iter()
                .zip(&self.layer_dims[1..])
                .any(|(z, &d)| z.cols() != d)
        {
            return Err(Error::Usage(
                "forward cache does not belong to this model".into(),
            ));
        }
        let last = cache.pre_activations.last().unwrap();
        if output_grad.shape() != last.shape() {
            return Err(Error::Dimension(format!(
                "output gradient is {}x{} but outputs are {}x{}",
                output_grad.rows(),
                output_grad.cols(),
                last.rows(),
                last.cols()
            )));
        }

        let n = self.num_layers();
        let mut weights = Vec::with_capacity(n);
        let mut biases = Vec::with_capacity(n);
        let mut delta = output_grad.clone();
        for l in (0..n).rev() {
            weights.push(cache.inputs[l].t_matmul(&delta)?);
            let mut gb = vec![0.0; delta.cols()];
            for i in 0..delta.rows() {
                for (g, d) in gb.iter_mut().zip(delta.row(i)) {
                    *g += d;
                }
            }
            biases.push(gb);
            if l > 0 {
                let mut upstream = delta.matmul_t(&self.weights[l])?;
                let z = &cache.pre_activations[l - 1];
                for (u, &zv) in upstream.as_mut_slice().iter_mut().zip(z.as_slice()) {
                    if zv <= 0.0 {
                        *u = 0.0;
                    }
                }
                delta = upstream;
            }
        }
        weights.reverse();
        biases.reverse();
        Ok(ParamGrads { weights, biases })
    }
}

fn relu(z: &Matrix) -> Matrix {
    let mut a = z.clone();
    for v in a.as_mut_slice() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn zero_model_maps_everything_to_zero() {
        let mlp = Mlp::zeros(vec![3, 4, 2], OutputHeads::single(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_matrix(&mut rng, 5, 3);
        let (out, _) = mlp.forward(&x).unwrap();
        assert_eq!(out, Matrix::zeros(5, 2));
    }

    #[test]
    fn identity_layer_is_identity() {
        let mlp = Mlp::from_parameters(
            vec![Matrix::identity(3)],
            vec![vec![0.0; 3]],
            OutputHeads::single(3),
        )
        .unwrap();
        let x = Matrix::from_rows(&[[1.0, -2.0, 0.5], [0.0, 3.0, -1.5]]).unwrap();
        let (out, _) = mlp.forward(&x).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn two_three_one_matches_scalar_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut mlp = Mlp::new(vec![2, 3, 1], OutputHeads::single(1), &mut rng).unwrap();
        let b1 = [0.1, -0.3, 0.2];
        mlp.tensors_mut()[1].copy_from_slice(&b1);
        mlp.tensors_mut()[3].copy_from_slice(&[0.05]);
        let x = [0.7, -0.4];

        let w1 = &mlp.weights()[0];
        let w2 = &mlp.weights()[1];
        let mut expected = 0.05;
        for j in 0..3 {
            let mut h = b1[j];
            for (i, xi) in x.iter().enumerate() {
                h += xi * w1[(i, j)];
            }
            expected += h.max(0.0) * w2[(j, 0)];
        }
        let out = mlp.predict(&Matrix::from_rows(&[x]).unwrap()).unwrap();
        assert!((out[(0, 0)] - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_cotangent_gives_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mlp = Mlp::new(vec![4, 5, 3], OutputHeads::single(3), &mut rng).unwrap();
        let x = random_matrix(&mut rng, 6, 4);
        let (out, cache) = mlp.forward(&x).unwrap();
        let grads = mlp
            .backward(&cache, &Matrix::zeros(out.rows(), out.cols()))
            .unwrap();
        assert!(grads.flatten().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn linear_layer_weight_grad_is_xt_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mlp = Mlp::new(vec![3, 2], OutputHeads::single(2), &mut rng).unwrap();
        let x = random_matrix(&mut rng, 4, 3);
        let y = random_matrix(&mut rng, 4, 2);
        let (out, cache) = mlp.forward(&x).unwrap();
        // d/dout of 0.5 * ||out - y||^2
        let mut delta = out.clone();
        delta.add_scaled(&y, -1.0).unwrap();
        let grads = mlp.backward(&cache, &delta).unwrap();
        assert_eq!(grads.weights[0], x.t_matmul(&delta).unwrap());
    }

    #[test]
    fn shape_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mlp = Mlp::new(vec![3, 4, 1], OutputHeads::single(1), &mut rng).unwrap();
        assert!(matches!(
            mlp.forward(&Matrix::zeros(2, 5)),
            Err(Error::Dimension(_))
        ));
        let other = Mlp::new(vec![3, 2, 2, 1], OutputHeads::single(1), &mut rng).unwrap();
        let (_, foreign_cache) = other.forward(&Matrix::zeros(2, 3)).unwrap();
        assert!(matches!(
            mlp.backward(&foreign_cache, &Matrix::zeros(2, 1)),
            Err(Error::Usage(_))
        ));
        let (_, cache) = mlp.forward(&Matrix::zeros(2, 3)).unwrap();
        assert!(matches!(
            mlp.backward(&cache, &Matrix::zeros(3, 1)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn heads_must_cover_output() {
        assert!(Mlp::zeros(vec![2, 3], OutputHeads::new(vec![1, 1]).unwrap()).is_err());
        let heads = OutputHeads::new(vec![2, 1, 3]).unwrap();
        assert_eq!(heads.range(1), Some(2..3));
        assert_eq!(heads.range(2), Some(3..6));
        assert_eq!(heads.range(3), None);
    }

    #[test]
    fn parameter_count_closed_form() {
        let mlp = Mlp::zeros(vec![90, 60, 25, 1], OutputHeads::single(1)).unwrap();
        assert_eq!(mlp.parameter_count(), 90 * 60 + 60 + 60 * 25 + 25 + 25 + 1);
        assert_eq!(mlp.parameter_count(), 7011);
    }
}
