use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Hidden-layer nonlinearity. The output layer is always affine, optionally
/// followed by a sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `h`.
    #[inline]
    fn derivative(self, z: f64, h: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - h * h,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn tag(self) -> u32 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
            Activation::Relu => 2,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Relu),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "linear" | "none" => Ok(Activation::Identity),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::Config(format!(
                "unknown activation `{other}` (expected tanh, relu or identity)"
            ))),
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One affine layer; `weight` is `d_in × d_out`, `bias` is `1 × d_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weight: Tensor,
    pub bias: Tensor,
}

/// Feedforward network producing one score per input row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffModel {
    layer_dims: Vec<usize>,
    layers: Vec<DenseLayer>,
    activation: Activation,
    sigmoid_output: bool,
}

/// Parameter gradients, one tensor per parameter tensor in model order
/// (weight then bias, layer by layer).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub params: Vec<Tensor>,
    /// Gradient with respect to the input rows.
    pub d_inputs: Tensor,
    /// The upstream per-sample gradient this set was produced from.
    pub d_scores: Tensor,
}

impl GradientSet {
    pub fn flatten(&self) -> Vec<f64> {
        self.params
            .iter()
            .flat_map(|t| t.data().iter().copied())
            .collect()
    }
}

struct ForwardCache {
    /// `inputs[l]` is the input to layer `l`; the last entry is the affine output.
    inputs: Vec<Tensor>,
    pre_activations: Vec<Tensor>,
}

fn check_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::Config(format!(
            "layer_dims needs an input and an output dimension, got {layer_dims:?}"
        )));
    }
    if *layer_dims.last().unwrap() != 1 {
        return Err(Error::Config(format!(
            "the last layer dimension must be 1, got {layer_dims:?}"
        )));
    }
    if layer_dims.contains(&0) {
        return Err(Error::Config(format!(
            "layer dimensions must be positive, got {layer_dims:?}"
        )));
    }
    Ok(())
}

impl DiffModel {
    /// Draws weights and biases from `U(-1/√fan_in, 1/√fan_in)` with a seeded ChaCha8 stream.
    pub fn init(layer_dims: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with_rng(layer_dims, activation, &mut rng)
    }

    pub fn init_with_rng<R: Rng>(
        layer_dims: &[usize],
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        check_dims(layer_dims)?;
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let mut draw = |n: usize| -> Vec<f64> {
                    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
                };
                let weight = Tensor::from_vec(fan_in, fan_out, draw(fan_in * fan_out))
                    .expect("sized by construction");
                let bias =
                    Tensor::from_vec(1, fan_out, draw(fan_out)).expect("sized by construction");
                DenseLayer { weight, bias }
            })
            .collect();
        Ok(DiffModel {
            layer_dims: layer_dims.to_vec(),
            layers,
            activation,
            sigmoid_output: false,
        })
    }

    /// Builds a model from explicit layers, validating shapes.
    pub fn from_layers(
        layers: Vec<DenseLayer>,
        activation: Activation,
        sigmoid_output: bool,
    ) -> Result<Self> {
        let mut dims = Vec::with_capacity(layers.len() + 1);
        for (i, layer) in layers.iter().enumerate() {
            let (din, dout) = layer.weight.shape();
            if layer.bias.shape() != (1, dout) {
                return Err(Error::Shape(format!(
                    "layer {i}: bias {:?} does not match weight {din}x{dout}",
                    layer.bias.shape()
                )));
            }
            if let Some(&prev) = dims.last() {
                if prev != din {
                    return Err(Error::Shape(format!(
                        "layer {i}: input dim {din} does not follow previous output {prev}"
                    )));
                }
            } else {
                dims.push(din);
            }
            dims.push(dout);
        }
        check_dims(&dims)?;
        Ok(DiffModel {
            layer_dims: dims,
            layers,
            activation,
            sigmoid_output,
        })
    }

    pub fn with_sigmoid(mut self, on: bool) -> Self {
        self.sigmoid_output = on;
        self
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn sigmoid_output(&self) -> bool {
        self.sigmoid_output
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn num_params(&self) -> usize {
        self.layer_dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            out.extend_from_slice(layer.weight.data());
            out.extend_from_slice(layer.bias.data());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "{} parameters supplied, model has {}",
                params.len(),
                self.num_params()
            )));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            for t in [&mut layer.weight, &mut layer.bias] {
                let n = t.data().len();
                t.data_mut().copy_from_slice(&params[offset..offset + n]);
                offset += n;
            }
        }
        Ok(())
    }

    fn check_batch(&self, batch: &Tensor) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "batch has {} features, model expects {}",
                batch.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn forward_cached(&self, batch: &Tensor) -> Result<ForwardCache> {
        self.check_batch(batch)?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        inputs.push(batch.clone());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = inputs[l].matmul(&layer.weight)?;
            z.add_row_broadcast(&layer.bias)?;
            let h = if l == last {
                z.clone()
            } else {
                z.map(|v| self.activation.apply(v))
            };
            pre_activations.push(z);
            inputs.push(h);
        }
        Ok(ForwardCache {
            inputs,
            pre_activations,
        })
    }

    /// Scores as an `n×1` tensor.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let cache = self.forward_cached(batch)?;
        let out = cache.inputs.into_iter().last().expect("at least one layer");
        Ok(if self.sigmoid_output {
            out.map(sigmoid)
        } else {
            out
        })
    }

    pub fn scores(&self, batch: &Tensor) -> Result<Vec<f64>> {
        Ok(self.forward(batch)?.into_data())
    }

    /// Gradient of `Σ_i d_scores[i] · h(x_i)` with respect to every parameter and input.
    pub fn backward(&self, batch: &Tensor, d_scores: &Tensor) -> Result<GradientSet> {
        if d_scores.shape() != (batch.rows(), 1) {
            return Err(Error::Shape(format!(
                "d_scores is {:?}, expected ({}, 1)",
                d_scores.shape(),
                batch.rows()
            )));
        }
        let cache = self.forward_cached(batch)?;
        let last = self.layers.len() - 1;

        let mut delta = if self.sigmoid_output {
            let out = &cache.inputs[last + 1];
            let mut d = d_scores.clone();
            for (g, &z) in d.data_mut().iter_mut().zip(out.data()) {
                let s = sigmoid(z);
                *g *= s * (1.0 - s);
            }
            d
        } else {
            d_scores.clone()
        };

        let mut grads = vec![Tensor::zeros(0, 0); 2 * self.layers.len()];
        for l in (0..self.layers.len()).rev() {
            if l != last {
                let z = &cache.pre_activations[l];
                let h = &cache.inputs[l + 1];
                for ((g, &zv), &hv) in delta.data_mut().iter_mut().zip(z.data()).zip(h.data()) {
                    *g *= self.activation.derivative(zv, hv);
                }
            }
            grads[2 * l] = cache.inputs[l].t_matmul(&delta)?;
            grads[2 * l + 1] = delta.sum_rows();
            delta = delta.matmul_t(&self.layers[l].weight)?;
        }

        Ok(GradientSet {
            params: grads,
            d_inputs: delta,
            d_scores: d_scores.clone(),
        })
    }
}

/// Central-difference estimate of the same quantity [`DiffModel::backward`] returns.
pub fn finite_diff_grad(
    model: &DiffModel,
    batch: &Tensor,
    d_scores: &Tensor,
    epsilon: f64,
) -> Result<GradientSet> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if d_scores.shape() != (batch.rows(), 1) {
        return Err(Error::Shape(format!(
            "d_scores is {:?}, expected ({}, 1)",
            d_scores.shape(),
            batch.rows()
        )));
    }
    let weighted = |m: &DiffModel, x: &Tensor| -> Result<f64> {
        Ok(m.forward(x)?
            .data()
            .iter()
            .zip(d_scores.data())
            .map(|(h, d)| h * d)
            .sum())
    };

    let base = model.flat_params();
    let mut probe = model.clone();
    let mut flat = vec![0.0; base.len()];
    let mut shifted = base.clone();
    for i in 0..base.len() {
        shifted[i] = base[i] + epsilon;
        probe.set_flat_params(&shifted)?;
        let plus = weighted(&probe, batch)?;
        shifted[i] = base[i] - epsilon;
        probe.set_flat_params(&shifted)?;
        let minus = weighted(&probe, batch)?;
        shifted[i] = base[i];
        flat[i] = (plus - minus) / (2.0 * epsilon);
    }

    let mut d_inputs = Tensor::zeros(batch.rows(), batch.cols());
    let mut x = batch.clone();
    for i in 0..batch.data().len() {
        let orig = x.data()[i];
        x.data_mut()[i] = orig + epsilon;
        let plus = weighted(model, &x)?;
        x.data_mut()[i] = orig - epsilon;
        let minus = weighted(model, &x)?;
        x.data_mut()[i] = orig;
        d_inputs.data_mut()[i] = (plus - minus) / (2.0 * epsilon);
    }

    let mut params = Vec::with_capacity(2 * model.layers.len());
    let mut offset = 0;
    for layer in &model.layers {
        for t in [&layer.weight, &layer.bias] {
            let n = t.data().len();
            params.push(Tensor::from_vec(
                t.rows(),
                t.cols(),
                flat[offset..offset + n].to_vec(),
            )?);
            offset += n;
        }
    }
    Ok(GradientSet {
        params,
        d_inputs,
        d_scores: d_scores.clone(),
    })
}

/// Anything that maps a feature batch to one score per row and exposes a flat
/// parameter vector. Optimizers are written against this so the network can be
/// swapped for directly trainable scores in tests.
pub trait ScoreModel: Clone {
    fn scores(&self, batch: &Tensor) -> Result<Vec<f64>>;
    /// Flat gradient of `Σ_i d_scores[i] · score_i` in [`ScoreModel::params`] order.
    fn param_grads(&self, batch: &Tensor, d_scores: &[f64]) -> Result<Vec<f64>>;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]) -> Result<()>;
    /// True when scores already lie in (0, 1).
    fn outputs_probabilities(&self) -> bool;
}

impl ScoreModel for DiffModel {
    fn scores(&self, batch: &Tensor) -> Result<Vec<f64>> {
        DiffModel::scores(self, batch)
    }

    fn param_grads(&self, batch: &Tensor, d_scores: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .backward(batch, &Tensor::column(d_scores.to_vec()))?
            .flatten())
    }

    fn params(&self) -> Vec<f64> {
        self.flat_params()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        self.set_flat_params(params)
    }

    fn outputs_probabilities(&self) -> bool {
        self.sigmoid_output
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(w: f64, b: f64) -> DiffModel {
        DiffModel::from_layers(
            vec![DenseLayer {
                weight: Tensor::from_vec(1, 1, vec![w]).unwrap(),
                bias: Tensor::from_vec(1, 1, vec![b]).unwrap(),
            }],
            Activation::Identity,
            false,
        )
        .unwrap()
    }

    #[test]
    fn zero_model_scores_zero() {
        let mut m = DiffModel::init(&[3, 5, 1], Activation::Tanh, 1).unwrap();
        let n = m.num_params();
        m.set_flat_params(&vec![0.0; n]).unwrap();
        let x = Tensor::from_rows(&[[1.0, -2.0, 3.0], [0.5, 0.5, 9.0]]).unwrap();
        assert_eq!(m.scores(&x).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer_passes_input() {
        let m = linear(1.0, 0.0);
        let x = Tensor::from_rows(&[[2.5]]).unwrap();
        assert_eq!(m.scores(&x).unwrap(), vec![2.5]);
    }

    #[test]
    fn linear_backward_is_input_and_one() {
        let m = linear(0.7, -0.3);
        let x = Tensor::from_rows(&[[4.0]]).unwrap();
        let g = m.backward(&x, &Tensor::column(vec![1.0])).unwrap();
        assert_eq!(g.params[0].data(), &[4.0]);
        assert_eq!(g.params[1].data(), &[1.0]);
        assert_eq!(g.d_inputs.data(), &[0.7]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let m = DiffModel::init(&[4, 6, 1], Activation::Relu, 3).unwrap();
        let x = Tensor::from_rows(&[[1.0, 2.0, 3.0, 4.0], [-1.0, 0.5, 0.0, 2.0]]).unwrap();
        let g = m.backward(&x, &Tensor::column(vec![0.0, 0.0])).unwrap();
        assert!(g.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn parameter_count_and_seeding() {
        let a = DiffModel::init(&[4, 8, 1], Activation::Tanh, 42).unwrap();
        let b = DiffModel::init(&[4, 8, 1], Activation::Tanh, 42).unwrap();
        let c = DiffModel::init(&[4, 8, 1], Activation::Tanh, 43).unwrap();
        assert_eq!(a.num_params(), 49);
        assert_eq!(a.flat_params().len(), 49);
        assert_eq!(a, b);
        assert_ne!(a.flat_params(), c.flat_params());
        let bound = 1.0 / 2.0;
        assert!(a.layers()[0].weight.data().iter().all(|w| w.abs() < bound));
    }

    #[test]
    fn bad_dims_rejected() {
        assert!(matches!(
            DiffModel::init(&[4, 8, 2], Activation::Tanh, 0),
            Err(Error::Config(_))
        ));
        assert!(DiffModel::init(&[1], Activation::Tanh, 0).is_err());
        let m = DiffModel::init(&[3, 1], Activation::Tanh, 0).unwrap();
        assert!(matches!(
            m.forward(&Tensor::zeros(2, 4)),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            m.backward(&Tensor::zeros(2, 3), &Tensor::column(vec![1.0])),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn sigmoid_mode_bounds_scores() {
        let m = DiffModel::init(&[2, 4, 1], Activation::Tanh, 9)
            .unwrap()
            .with_sigmoid(true);
        let x = Tensor::from_rows(&[[100.0, -100.0], [0.0, 0.0], [-50.0, 70.0]]).unwrap();
        for s in m.scores(&x).unwrap() {
            assert!(s > 0.0 && s < 1.0);
        }
    }

    #[test]
    fn constant_model_has_zero_fd_gradient_in_inputs() {
        // all weights zero: output is the bias alone, so inputs have no effect
        let mut m = DiffModel::init(&[2, 3, 1], Activation::Tanh, 5).unwrap();
        let mut p = vec![0.0; m.num_params()];
        *p.last_mut().unwrap() = 1.5;
        m.set_flat_params(&p).unwrap();
        let x = Tensor::from_rows(&[[1.0, 2.0]]).unwrap();
        let fd = finite_diff_grad(&m, &x, &Tensor::column(vec![1.0]), 1e-5).unwrap();
        assert!(fd.d_inputs.data().iter().all(|&v| v == 0.0));
        assert!(finite_diff_grad(&m, &x, &Tensor::column(vec![1.0]), 0.0).is_err());
    }
}
