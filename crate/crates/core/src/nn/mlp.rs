//! Dense feed-forward networks with hand-written reverse-mode gradients.
//!
//! Each layer computes `a = act(x Wᵀ + b)` on a row-major batch `x`, with
//! `W` stored as `out_dim × in_dim`. [`Mlp::backward`] returns gradients for
//! every weight and bias and for the batch input itself, which is what lets an
//! encoder be trained through a frozen critic.

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::rng::Prng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::config(format!("unknown activation {other:?}"))),
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

/// One affine layer followed by an element-wise activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `out_dim × in_dim`
    pub weights: Matrix,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Per-layer pre- and post-activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Matrix,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

impl ForwardCache {
    pub fn input(&self) -> &Matrix {
        &self.input
    }

    pub fn output(&self) -> &Matrix {
        self.post.last().unwrap_or(&self.input)
    }

    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre
    }

    pub fn post_activations(&self) -> &[Matrix] {
        &self.post
    }
}

/// Gradient for one [`Dense`] layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

/// Parameter gradients shaped like an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weights: Matrix::zeros(l.out_dim(), l.in_dim()),
                    biases: vec![0.0; l.out_dim()],
                })
                .collect(),
        }
    }

    pub fn same_shape(&self, other: &Gradients) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weights.shape() == b.weights.shape() && a.biases.len() == b.biases.len())
    }

    pub fn matches(&self, net: &Mlp) -> bool {
        self.layers.len() == net.layers.len()
            && self.layers.iter().zip(&net.layers).all(|(g, l)| {
                g.weights.shape() == l.weights.shape() && g.biases.len() == l.biases.len()
            })
    }

    pub fn add_scaled(&mut self, other: &Gradients, factor: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.add_scaled(&b.weights, factor);
            for (x, y) in a.biases.iter_mut().zip(&b.biases) {
                *x += factor * y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.scale(factor);
            l.biases.iter_mut().for_each(|b| *b *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }

    pub fn l2_norm(&self) -> f64 {
        self.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Flattened in checkpoint order: per layer, weights row-major then biases.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.values().iter().chain(&l.biases).copied())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().collect()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.values_mut().iter_mut().chain(l.biases.iter_mut()))
    }
}

impl Mlp {
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.in_dim() == 0 || l.out_dim() == 0 {
                return Err(Error::config(format!("layer {i} has a zero dimension")));
            }
            if l.biases.len() != l.out_dim() {
                return Err(Error::config(format!(
                    "layer {i}: {} biases for {} outputs",
                    l.biases.len(),
                    l.out_dim()
                )));
            }
            if i > 0 && layers[i - 1].out_dim() != l.in_dim() {
                return Err(Error::config(format!(
                    "layer {i} expects {} inputs but previous layer emits {}",
                    l.in_dim(),
                    layers[i - 1].out_dim()
                )));
            }
            if !l.weights.is_finite() || l.biases.iter().any(|b| !b.is_finite()) {
                return Err(Error::config(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(Self { layers })
    }

    /// All-zero parameters.
    pub fn zeros(dims: &[usize], activations: &[Activation]) -> Result<Self> {
        check_dims(dims, activations)?;
        Self::new(
            dims.windows(2)
                .zip(activations)
                .map(|(w, &activation)| Dense {
                    weights: Matrix::zeros(w[1], w[0]),
                    biases: vec![0.0; w[1]],
                    activation,
                })
                .collect(),
        )
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(dims: &[usize], activations: &[Activation], rng: &mut Prng) -> Result<Self> {
        let mut net = Self::zeros(dims, activations)?;
        for layer in &mut net.layers {
            let limit = glorot_limit(layer.in_dim(), layer.out_dim());
            for w in layer.weights.values_mut() {
                *w = limit * (2.0 * rng.next_f64() - 1.0);
            }
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(Dense::out_dim));
        dims
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.values().len() + l.biases.len())
            .sum()
    }

    /// Parameters in checkpoint order: per layer, weights row-major then biases.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.values().iter().chain(&l.biases).copied())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.values_mut().iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.params().collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::config(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        for (p, v) in self.params_mut().zip(flat) {
            *p = *v;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(f64::is_finite)
    }

    fn check_input(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(Error::config(format!(
                "batch has {} columns, network expects {}",
                batch.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn affine(layer: &Dense, input: &Matrix) -> Matrix {
        let mut z = Matrix::zeros(input.rows(), layer.out_dim());
        for r in 0..input.rows() {
            z.row_mut(r).copy_from_slice(&layer.biases);
        }
        Matrix::gemm(1.0, input, false, &layer.weights, true, 1.0, &mut z);
        z
    }

    /// Forward pass keeping everything [`Mlp::backward`] needs.
    pub fn forward(&self, batch: &Matrix) -> Result<(Matrix, ForwardCache)> {
        self.check_input(batch)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = post.last().unwrap_or(batch);
            let z = Self::affine(layer, input);
            let mut a = z.clone();
            a.values_mut()
                .iter_mut()
                .for_each(|v| *v = layer.activation.apply(*v));
            pre.push(z);
            post.push(a);
        }
        let outputs = post.last().cloned().expect("non-empty network");
        if !outputs.is_finite() {
            return Err(Error::training(
                "non-finite network output",
                format!("dims {:?}", self.layer_dims()),
            ));
        }
        Ok((
            outputs,
            ForwardCache {
                input: batch.clone(),
                pre,
                post,
            },
        ))
    }

    /// Forward pass without retaining intermediates.
    pub fn predict(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_input(batch)?;
        let mut current: Option<Matrix> = None;
        for layer in &self.layers {
            let mut z = Self::affine(layer, current.as_ref().unwrap_or(batch));
            z.values_mut()
                .iter_mut()
                .for_each(|v| *v = layer.activation.apply(*v));
            current = Some(z);
        }
        Ok(current.expect("non-empty network"))
    }

    /// Reverse-mode pass. `output_grad` is dLoss/d(outputs) for the cached batch.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<(Gradients, Matrix)> {
        self.backward_impl(cache, output_grad, false)
    }

    /// Like [`Mlp::backward`], but `logit_grad` is taken w.r.t. the final
    /// layer's pre-activations (e.g. `p − t` for sigmoid + cross-entropy).
    pub fn backward_from_logits(&self, cache: &ForwardCache, logit_grad: &Matrix) -> Result<(Gradients, Matrix)> {
        self.backward_impl(cache, logit_grad, true)
    }

    fn backward_impl(&self, cache: &ForwardCache, output_grad: &Matrix, logits: bool) -> Result<(Gradients, Matrix)> {
        if cache.pre.len() != self.layers.len() || cache.post.len() != self.layers.len() {
            return Err(Error::usage(format!(
                "forward cache holds {} layers, network has {}",
                cache.pre.len(),
                self.layers.len()
            )));
        }
        let expected = (cache.input.rows(), self.output_dim());
        if output_grad.shape() != expected {
            return Err(Error::usage(format!(
                "output gradient shape {:?} does not match outputs {:?}",
                output_grad.shape(),
                expected
            )));
        }
        for (layer, z) in self.layers.iter().zip(&cache.pre) {
            if z.cols() != layer.out_dim() || z.rows() != cache.input.rows() {
                return Err(Error::usage("forward cache was produced by a different network"));
            }
        }

        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = output_grad.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.pre[i];
            let a = &cache.post[i];
            // dL/dz = dL/da * act'(z)
            let mut dz = upstream;
            if !(logits && i + 1 == self.layers.len()) {
                for ((g, &zv), &av) in dz.values_mut().iter_mut().zip(z.values()).zip(a.values()) {
                    *g *= layer.activation.derivative(zv, av);
                }
            }
            let input = if i == 0 { &cache.input } else { &cache.post[i - 1] };
            let mut dw = Matrix::zeros(layer.out_dim(), layer.in_dim());
            Matrix::gemm(1.0, &dz, true, input, false, 0.0, &mut dw);
            let mut db = vec![0.0; layer.out_dim()];
            for r in 0..dz.rows() {
                for (b, g) in db.iter_mut().zip(dz.row(r)) {
                    *b += g;
                }
            }
            let mut dx = Matrix::zeros(dz.rows(), layer.in_dim());
            Matrix::gemm(1.0, &dz, false, &layer.weights, false, 0.0, &mut dx);
            grads.push(LayerGrads {
                weights: dw,
                biases: db,
            });
            upstream = dx;
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, upstream))
    }
}

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn check_dims(dims: &[usize], activations: &[Activation]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::config("need at least input and output dims"));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::config(format!("zero layer width in {dims:?}")));
    }
    if activations.len() != dims.len() - 1 {
        return Err(Error::config(format!(
            "{} activations for {} weight layers",
            activations.len(),
            dims.len() - 1
        )));
    }
    Ok(())
}
