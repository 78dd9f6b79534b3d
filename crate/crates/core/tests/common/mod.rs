//! Helpers shared by the integration tests.
#![allow(dead_code)]

use infoshape::data::{DatasetMeta, LabeledDataset, Provenance};
use infoshape::mi::{MiEstimatorNet, SampleSet};
use infoshape::nn::{Activation, Matrix, Mlp};
use infoshape::trainer::{encoder_loss_gradient, surrogate_objective, EncoderBatch, EncoderModel};
use infoshape::Prng;
use rand_distr::{Distribution, StandardNormal};

pub const FD_STEP: f64 = 1e-4;

/// Relative error with an absolute floor so that near-zero entries compare sanely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

pub const ACTIVATIONS: [Activation; 4] = [Activation::Tanh, Activation::Relu, Activation::Sigmoid, Activation::Identity];

/// Random architecture with at most `max_params` parameters.
pub fn random_architecture(rng: &mut Prng, max_params: usize) -> (Vec<usize>, Vec<Activation>) {
    loop {
        let depth = 1 + (rng.next_f64() * 3.0) as usize;
        let dims: Vec<usize> = (0..=depth).map(|_| 1 + (rng.next_f64() * 5.0) as usize).collect();
        let acts: Vec<Activation> = (0..depth).map(|_| ACTIVATIONS[(rng.next_f64() * 4.0) as usize]).collect();
        let params: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if params <= max_params {
            return (dims, acts);
        }
    }
}

fn weighted_sum(net: &Mlp, x: &Matrix, w: &Matrix) -> f64 {
    let y = net.predict(x).unwrap();
    y.values().iter().zip(w.values()).map(|(a, b)| a * b).sum()
}

/// Largest relative error between backprop and central differences over every
/// parameter and input of a random instance; `None` if a ReLU sits within
/// reach of its kink, where the difference quotient is meaningless.
pub fn mlp_fd_error(dims: &[usize], acts: &[Activation], seed: u64) -> Option<f64> {
    let mut rng = Prng::new(seed);
    let mut net = Mlp::init(dims, acts, &mut rng).unwrap();
    // biases off zero so ReLU kinks are not sat on exactly
    for layer in net.layers_mut() {
        for b in &mut layer.biases {
            *b = 0.3 * (rng.next_f64() - 0.5);
        }
    }
    let batch = 3;
    let x = Matrix::from_fn(batch, dims[0], |_, _| rng.next_f64() * 2.0 - 1.0);
    let w = Matrix::from_fn(batch, *dims.last().unwrap(), |_, _| rng.next_f64() * 2.0 - 1.0);
    let (_, cache) = net.forward(&x).unwrap();
    let near_kink = cache
        .pre_activations()
        .iter()
        .zip(acts)
        .any(|(z, a)| *a == Activation::Relu && z.values().iter().any(|v| v.abs() < 1e-3));
    if near_kink {
        return None;
    }
    let (grads, input_grad) = net.backward(&cache, &w).unwrap();
    assert!(grads.matches(&net));
    assert_eq!(input_grad.shape(), x.shape());

    let h = FD_STEP;
    let flat = net.to_flat();
    let mut worst: f64 = 0.0;
    for (i, g) in grads.to_flat().into_iter().enumerate() {
        let at = |delta: f64| {
            let mut p = flat.clone();
            p[i] += delta;
            let mut n = net.clone();
            n.set_flat(&p).unwrap();
            weighted_sum(&n, &x, &w)
        };
        worst = worst.max(rel_err(g, (at(h) - at(-h)) / (2.0 * h)));
    }
    for r in 0..batch {
        for c in 0..dims[0] {
            let at = |delta: f64| {
                let mut xp = x.clone();
                xp.set(r, c, x.get(r, c) + delta);
                weighted_sum(&net, &xp, &w)
            };
            worst = worst.max(rel_err(input_grad.get(r, c), (at(h) - at(-h)) / (2.0 * h)));
        }
    }
    Some(worst)
}

pub fn toy_dataset(n: usize, seed: u64) -> LabeledDataset {
    let mut rng = Prng::new(seed);
    let x = Matrix::from_fn(n, 4, |_, _| rng.next_f64() * 2.0 - 1.0);
    let public = (0..n).map(|r| u8::from(x.get(r, 0) + 0.3 * x.get(r, 2) > 0.0)).collect();
    let private = (0..n).map(|r| u8::from(x.get(r, 1) > 0.0)).collect();
    LabeledDataset::new(x, public, private, Provenance::DesignerSet, DatasetMeta::default()).unwrap()
}

/// A small encoder with two frozen smooth critics and one batch.
pub struct SurrogateInstance {
    pub encoder: EncoderModel,
    pub public: MiEstimatorNet,
    pub private: MiEstimatorNet,
    pub batch: EncoderBatch,
}

impl SurrogateInstance {
    pub fn new(seed: u64) -> Self {
        let mut rng = Prng::new(seed);
        let encoder = EncoderModel::custom(&[4, 3, 2], &mut rng).unwrap();
        let critic = |rng: &mut Prng| {
            let net = Mlp::init(&[3, 5, 1], &[Activation::Tanh, Activation::Identity], rng).unwrap();
            MiEstimatorNet::from_mlp(net).unwrap()
        };
        let public = critic(&mut rng);
        let private = critic(&mut rng);
        let ds = toy_dataset(12, seed ^ 0xabc);
        let batch = EncoderBatch::sample(&ds, 12, &mut rng).unwrap();
        Self {
            encoder,
            public,
            private,
            batch,
        }
    }

    pub fn objective(&self, encoder: &EncoderModel, lambda: f64) -> f64 {
        surrogate_objective(encoder, &self.public, &self.private, &self.batch, lambda).unwrap()
    }

    pub fn gradient(&self, lambda: f64) -> Vec<f64> {
        encoder_loss_gradient(&self.encoder, &self.public, &self.private, &self.batch, lambda)
            .unwrap()
            .to_flat()
    }

    /// Largest relative error of the analytic encoder gradient.
    pub fn fd_error(&self, lambda: f64) -> f64 {
        let h = FD_STEP;
        let flat = self.encoder.net().to_flat();
        let mut worst: f64 = 0.0;
        for (i, g) in self.gradient(lambda).into_iter().enumerate() {
            let at = |delta: f64| {
                let mut p = flat.clone();
                p[i] += delta;
                let mut net = self.encoder.net().clone();
                net.set_flat(&p).unwrap();
                self.objective(&EncoderModel::from_mlp(net, self.encoder.preset()).unwrap(), lambda)
            };
            worst = worst.max(rel_err(g, (at(h) - at(-h)) / (2.0 * h)));
        }
        worst
    }
}

/// `n` draws of (a, b) from a joint pmf over small alphabets; `a` is one-hot
/// when `one_hot`, otherwise its index.
pub fn sample_pmf(pmf: &[Vec<f64>], n: usize, one_hot: bool, rng: &mut Prng) -> SampleSet {
    let k = pmf.len();
    let cells: Vec<(usize, usize, f64)> = pmf
        .iter()
        .enumerate()
        .flat_map(|(a, row)| row.iter().enumerate().map(move |(b, &p)| (a, b, p)))
        .collect();
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u = rng.next_f64();
        let mut pick = cells.last().unwrap();
        for c in &cells {
            if u < c.2 {
                pick = c;
                break;
            }
            u -= c.2;
        }
        if one_hot {
            alpha.extend((0..k).map(|j| f64::from(u8::from(j == pick.0))));
        } else {
            alpha.push(pick.0 as f64);
        }
        beta.push(pick.1 as f64);
    }
    let width = if one_hot { k } else { 1 };
    SampleSet::new(Matrix::from_vec(n, width, alpha).unwrap(), beta).unwrap()
}

/// Standard bivariate Gaussian pairs with correlation `rho`.
pub fn gaussian_pairs(rho: f64, n: usize, rng: &mut Prng) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = StandardNormal.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        xs.push(x);
        ys.push(rho * x + (1.0 - rho * rho).sqrt() * z);
    }
    (xs, ys)
}

pub fn gaussian_set(rho: f64, n: usize, rng: &mut Prng) -> SampleSet {
    let (xs, ys) = gaussian_pairs(rho, n, rng);
    SampleSet::new(Matrix::from_vec(n, 1, xs).unwrap(), ys).unwrap()
}
