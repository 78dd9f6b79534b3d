//! Encoder training against frozen mutual-information critics.
//!
//! Each epoch encodes the design set, trains one critic for `I[L; T]` and one
//! for `I[S; T]`, records the scores, then takes Adam steps on the encoder
//! that minimise the surrogate
//!
//! ```text
//! Q̂(θ) = λ · DV_S(T_θ) − DV_L(T_θ)
//! ```
//!
//! i.e. it raises the public-label estimate and lowers the private-label one.
//! Gradients reach θ through the critics' input gradients; the label
//! entropies are constants and drop out.
//!
//! The recorded loss keeps the score form `Q = M_privacy + λ · M_utility`
//! with `M_utility = I_L − H_L` and `M_privacy = H_S − I_S`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, Provenance};
use crate::error::{Error, Result};
use crate::mi::{
    dv_from_scores, score_gradients, train_mi_estimator_from, MiEstimate, MiEstimatorConfig,
    MiEstimatorNet, MiTrace, SampleSet,
};
use crate::nn::{adam_step, Activation, AdamState, Checkpoint, Gradients, Matrix, Mlp};
use crate::rng::Prng;

/// Encoder architectures used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchitecturePreset {
    /// 10 → 10 → 3, Tanh.
    Synthetic,
    /// 784 → 50 → 10, Tanh.
    Mnist,
    /// Any Tanh stack built with [`EncoderModel::custom`].
    Custom,
}

impl ArchitecturePreset {
    pub fn layer_dims(self) -> Option<&'static [usize]> {
        match self {
            ArchitecturePreset::Synthetic => Some(&[10, 10, 3]),
            ArchitecturePreset::Mnist => Some(&[784, 50, 10]),
            ArchitecturePreset::Custom => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ArchitecturePreset::Synthetic => "synthetic",
            ArchitecturePreset::Mnist => "mnist",
            ArchitecturePreset::Custom => "custom",
        }
    }

    pub fn code_dim(self) -> Option<usize> {
        self.layer_dims().map(|d| d[d.len() - 1])
    }
}

impl std::str::FromStr for ArchitecturePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(Self::Synthetic),
            "mnist" => Ok(Self::Mnist),
            "custom" => Ok(Self::Custom),
            other => Err(Error::config(format!("unknown architecture preset {other:?}"))),
        }
    }
}

/// An encoder `T_θ`; its output layer is Tanh so codes lie in `(−1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    net: Mlp,
    preset: ArchitecturePreset,
}

impl EncoderModel {
    pub fn from_preset(preset: ArchitecturePreset, rng: &mut Prng) -> Result<Self> {
        let dims = preset
            .layer_dims()
            .ok_or_else(|| Error::config("custom encoders need explicit dims"))?;
        let net = Mlp::init(dims, &vec![Activation::Tanh; dims.len() - 1], rng)?;
        Ok(Self { net, preset })
    }

    pub fn custom(dims: &[usize], rng: &mut Prng) -> Result<Self> {
        let net = Mlp::init(dims, &vec![Activation::Tanh; dims.len().saturating_sub(1)], rng)?;
        Ok(Self {
            net,
            preset: ArchitecturePreset::Custom,
        })
    }

    pub fn from_mlp(net: Mlp, preset: ArchitecturePreset) -> Result<Self> {
        if net.activations().last() != Some(&Activation::Tanh) {
            return Err(Error::config("encoder output activation must be tanh"));
        }
        if let Some(dims) = preset.layer_dims() {
            if net.layer_dims() != dims {
                return Err(Error::config(format!(
                    "{} preset expects dims {dims:?}, network has {:?}",
                    preset.name(),
                    net.layer_dims()
                )));
            }
        }
        Ok(Self { net, preset })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn preset(&self) -> ArchitecturePreset {
        self.preset
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn code_dim(&self) -> usize {
        self.net.output_dim()
    }

    pub fn encode(&self, features: &Matrix) -> Result<Matrix> {
        self.net.predict(features)
    }

    pub fn checkpoint(&self, config_hash: &str) -> Checkpoint {
        Checkpoint::from_mlp(&self.net, format!("encoder/{}", self.preset.name()), config_hash)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let preset = ckpt
            .kind
            .strip_prefix("encoder/")
            .ok_or_else(|| Error::config(format!("checkpoint kind {:?} is not an encoder", ckpt.kind)))?
            .parse()?;
        Self::from_mlp(ckpt.to_mlp()?, preset)
    }
}

/// Replaces features by `T(x)`; labels and row order carry through unchanged.
pub fn encode_dataset(encoder: &EncoderModel, dataset: &LabeledDataset) -> Result<LabeledDataset> {
    if dataset.dim() != encoder.input_dim() {
        return Err(Error::config(format!(
            "encoder expects {} features, dataset has {}",
            encoder.input_dim(),
            dataset.dim()
        )));
    }
    let codes = encoder.encode(dataset.features())?;
    dataset.with_features(codes, Provenance::Encoded)
}

/// Binary Shannon entropy of the empirical label distribution, in nats.
pub fn label_entropy(labels: &[u8]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::usage("entropy of an empty label vector"));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::usage("labels must be 0 or 1"));
    }
    let p = labels.iter().filter(|&&l| l == 1).count() as f64 / labels.len() as f64;
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

/// `(M_utility, M_privacy) = (I_L − H_L, H_S − I_S)`.
pub fn utility_privacy_scores(i_public: f64, i_private: f64, h_public: f64, h_private: f64) -> (f64, f64) {
    (i_public - h_public, h_private - i_private)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TradeoffConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub lr: f64,
    /// Encoder Adam steps after each round of critic training.
    pub steps_per_epoch: usize,
    /// Rows per encoder step; `None` uses the estimator batch size.
    pub step_batch_size: Option<usize>,
    /// Fresh critics every epoch; otherwise critics are warm-started.
    pub reinit_estimators: bool,
    /// Train the two critics on separate threads (results are identical either way).
    pub parallel_estimators: bool,
    pub estimator: MiEstimatorConfig,
}

impl Default for TradeoffConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            epochs: 50,
            lr: 1e-3,
            steps_per_epoch: 1,
            step_batch_size: None,
            reinit_estimators: true,
            parallel_estimators: false,
            estimator: MiEstimatorConfig::default(),
        }
    }
}

impl TradeoffConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::config("lambda must be finite and non-negative"));
        }
        if self.epochs == 0 || !(self.lr > 0.0) {
            return Err(Error::config("epochs and lr must be positive"));
        }
        if self.step_batch_size.is_some_and(|b| b < 2) {
            return Err(Error::config("step_batch_size must be at least 2"));
        }
        self.estimator.validate()
    }

    fn step_batch(&self) -> usize {
        self.step_batch_size.unwrap_or(self.estimator.batch_size)
    }
}

/// Scores after the critics of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub i_public: f64,
    pub i_private: f64,
    pub h_public: f64,
    pub h_private: f64,
    pub m_utility: f64,
    pub m_privacy: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EncoderTrainRecord {
    pub lambda: f64,
    pub epochs: Vec<EpochRecord>,
    /// Critic traces per epoch: (public, private).
    pub traces: Vec<(MiTrace, MiTrace)>,
}

impl EncoderTrainRecord {
    pub const CSV_HEADER: &'static str = "epoch,I_L,I_S,H_L,H_S,M_utility,M_privacy,Q";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for e in &self.epochs {
            writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                e.epoch, e.i_public, e.i_private, e.h_public, e.h_private, e.m_utility, e.m_privacy, e.q
            )
            .unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// A minibatch for the encoder step, with the label permutations that form
/// its product-of-marginals partner fixed up front.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderBatch {
    pub features: Matrix,
    pub public: Vec<f64>,
    pub private: Vec<f64>,
    pub public_shuffled: Vec<f64>,
    pub private_shuffled: Vec<f64>,
}

impl EncoderBatch {
    pub fn new(features: Matrix, public: &[u8], private: &[u8], rng: &mut Prng) -> Result<Self> {
        let n = features.rows();
        if public.len() != n || private.len() != n || n < 2 {
            return Err(Error::usage("encoder batch needs ≥ 2 rows and one label of each kind per row"));
        }
        let public: Vec<f64> = public.iter().map(|&l| f64::from(l)).collect();
        let private: Vec<f64> = private.iter().map(|&l| f64::from(l)).collect();
        let mut public_shuffled = public.clone();
        public_shuffled.shuffle(rng);
        let mut private_shuffled = private.clone();
        private_shuffled.shuffle(rng);
        Ok(Self {
            features,
            public,
            private,
            public_shuffled,
            private_shuffled,
        })
    }

    /// `size` distinct rows of `dataset` (or all of them if `size` is larger).
    pub fn sample(dataset: &LabeledDataset, size: usize, rng: &mut Prng) -> Result<Self> {
        let n = dataset.len();
        let rows: Vec<usize> = if size >= n {
            (0..n).collect()
        } else {
            rand::seq::index::sample(rng, n, size).into_vec()
        };
        let sub = dataset.subset(&rows);
        Self::new(
            sub.features().clone(),
            sub.public_labels(),
            sub.private_labels(),
            rng,
        )
    }

    pub fn len(&self) -> usize {
        self.public.len()
    }

    pub fn is_empty(&self) -> bool {
        self.public.is_empty()
    }
}

/// DV estimate of one critic on `[codes | labels]` vs `[codes | shuffled]`,
/// plus the gradient of that estimate with respect to the codes.
fn critic_code_gradient(
    critic: &MiEstimatorNet,
    codes: &Matrix,
    labels: &[f64],
    shuffled: &[f64],
) -> Result<(f64, Matrix)> {
    let n = codes.rows();
    let k = codes.cols();
    if critic.alpha_dim() != k {
        return Err(Error::config(format!(
            "critic expects codes of dim {}, encoder emits {k}",
            critic.alpha_dim()
        )));
    }
    let stacked = codes.with_column(labels)?.vstack(&codes.with_column(shuffled)?)?;
    let (out, cache) = critic.mlp().forward(&stacked)?;
    let scores = out.into_values();
    let (fj, fp) = scores.split_at(n);
    let dv = dv_from_scores(fj, fp);
    let (dj, dp) = score_gradients(fj, fp, 0.0);
    let grad_out = Matrix::from_vec(2 * n, 1, dj.into_iter().chain(dp).collect())?;
    let (_, input_grad) = critic.mlp().backward(&cache, &grad_out)?;
    let mut code_grad = Matrix::zeros(n, k);
    for r in 0..n {
        let (joint, product) = (input_grad.row(r), input_grad.row(n + r));
        for (c, g) in code_grad.row_mut(r).iter_mut().enumerate() {
            *g = joint[c] + product[c];
        }
    }
    Ok((dv, code_grad))
}

/// `Q̂(θ) = λ · DV_S − DV_L` on the batch with both critics frozen.
pub fn surrogate_objective(
    encoder: &EncoderModel,
    public_critic: &MiEstimatorNet,
    private_critic: &MiEstimatorNet,
    batch: &EncoderBatch,
    lambda: f64,
) -> Result<f64> {
    let codes = encoder.encode(&batch.features)?;
    let dv = |critic: &MiEstimatorNet, labels: &[f64], shuffled: &[f64]| -> Result<f64> {
        let stacked = codes.with_column(labels)?.vstack(&codes.with_column(shuffled)?)?;
        let scores = critic.mlp().predict(&stacked)?.into_values();
        let (fj, fp) = scores.split_at(codes.rows());
        Ok(dv_from_scores(fj, fp))
    };
    let dv_public = dv(public_critic, &batch.public, &batch.public_shuffled)?;
    let dv_private = dv(private_critic, &batch.private, &batch.private_shuffled)?;
    Ok(lambda * dv_private - dv_public)
}

/// Gradient of [`surrogate_objective`] with respect to the encoder parameters only.
pub fn encoder_loss_gradient(
    encoder: &EncoderModel,
    public_critic: &MiEstimatorNet,
    private_critic: &MiEstimatorNet,
    batch: &EncoderBatch,
    lambda: f64,
) -> Result<Gradients> {
    let (codes, cache) = encoder.net.forward(&batch.features)?;
    let (_, g_public) = critic_code_gradient(public_critic, &codes, &batch.public, &batch.public_shuffled)?;
    let mut code_grad = g_public;
    code_grad.scale(-1.0);
    if lambda != 0.0 {
        let (_, g_private) =
            critic_code_gradient(private_critic, &codes, &batch.private, &batch.private_shuffled)?;
        code_grad.add_scaled(&g_private, lambda);
    }
    let (grads, _) = encoder.net.backward(&cache, &code_grad)?;
    if !grads.is_finite() {
        return Err(Error::training(
            "non-finite encoder gradient",
            format!("batch of {} rows, lambda {lambda}", batch.len()),
        ));
    }
    Ok(grads)
}

fn labels_f64(labels: &[u8]) -> Vec<f64> {
    labels.iter().map(|&l| f64::from(l)).collect()
}

fn train_critic(
    critic: Option<MiEstimatorNet>,
    codes: &Matrix,
    labels: &[u8],
    config: &MiEstimatorConfig,
    mut rng: Prng,
) -> Result<MiEstimate> {
    let mut source = SampleSet::new(codes.clone(), labels_f64(labels))?;
    let critic = match critic {
        Some(c) => c,
        None => {
            let mut init = rng.fork("critic-init");
            MiEstimatorNet::new(codes.cols(), &config.hidden, &mut init)?
        }
    };
    train_mi_estimator_from(critic, &mut source, config, &mut rng)
}

/// Result of the two critic trainings of one epoch.
type CriticPair = (Result<MiEstimate>, Result<MiEstimate>);

fn train_critics(
    critics: (Option<MiEstimatorNet>, Option<MiEstimatorNet>),
    codes: &Matrix,
    train_set: &LabeledDataset,
    config: &TradeoffConfig,
    rngs: (Prng, Prng),
) -> CriticPair {
    let est = &config.estimator;
    let (public_critic, private_critic) = critics;
    let (public_rng, private_rng) = rngs;
    if config.parallel_estimators {
        std::thread::scope(|s| {
            let handle = s.spawn(|| {
                train_critic(private_critic, codes, train_set.private_labels(), est, private_rng)
            });
            let public = train_critic(public_critic, codes, train_set.public_labels(), est, public_rng);
            let private = handle.join().unwrap_or_else(|_| {
                Err(Error::training("private-label critic thread panicked", ""))
            });
            (public, private)
        })
    } else {
        (
            train_critic(public_critic, codes, train_set.public_labels(), est, public_rng),
            train_critic(private_critic, codes, train_set.private_labels(), est, private_rng),
        )
    }
}

/// Encoder training was aborted; the record holds every completed epoch.
#[derive(Debug)]
pub struct TrainingAborted {
    pub epoch: usize,
    pub record: EncoderTrainRecord,
    pub error: Error,
}

impl std::fmt::Display for TrainingAborted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "training aborted at epoch {}: {}", self.epoch, self.error)
    }
}

impl std::error::Error for TrainingAborted {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Trains a fresh encoder of the given preset.
pub fn train_infoshape(
    train_set: &LabeledDataset,
    preset: ArchitecturePreset,
    config: &TradeoffConfig,
    rng: &mut Prng,
) -> std::result::Result<(EncoderModel, EncoderTrainRecord), TrainingAborted> {
    let mut init = rng.fork("encoder-init");
    let encoder = EncoderModel::from_preset(preset, &mut init).map_err(|error| TrainingAborted {
        epoch: 0,
        record: EncoderTrainRecord::default(),
        error,
    })?;
    train_infoshape_from(encoder, train_set, config, rng)
}

/// Runs the epoch loop starting from `encoder`.
pub fn train_infoshape_from(
    mut encoder: EncoderModel,
    train_set: &LabeledDataset,
    config: &TradeoffConfig,
    rng: &mut Prng,
) -> std::result::Result<(EncoderModel, EncoderTrainRecord), TrainingAborted> {
    let mut record = EncoderTrainRecord {
        lambda: config.lambda,
        ..Default::default()
    };
    let abort = |epoch: usize, record: &EncoderTrainRecord, error: Error| TrainingAborted {
        epoch,
        record: record.clone(),
        error,
    };
    let setup = (|| -> Result<(f64, f64)> {
        config.validate()?;
        if train_set.dim() != encoder.input_dim() {
            return Err(Error::config(format!(
                "encoder expects {} features, training set has {}",
                encoder.input_dim(),
                train_set.dim()
            )));
        }
        Ok((
            label_entropy(train_set.public_labels())?,
            label_entropy(train_set.private_labels())?,
        ))
    })();
    let (h_public, h_private) = setup.map_err(|e| abort(0, &record, e))?;

    let base = {
        use rand_core::RngCore;
        rng.next_u64()
    };
    let mut adam = AdamState::new(encoder.net(), config.lr);
    let mut critics: (Option<MiEstimatorNet>, Option<MiEstimatorNet>) = (None, None);

    for epoch in 1..=config.epochs {
        let codes = encoder
            .encode(train_set.features())
            .map_err(|e| abort(epoch, &record, e))?;
        let warm = if config.reinit_estimators {
            (None, None)
        } else {
            (critics.0.take(), critics.1.take())
        };
        let rngs = (
            Prng::indexed(base, "critic-public", epoch as u64),
            Prng::indexed(base, "critic-private", epoch as u64),
        );
        let (public, private) = train_critics(warm, &codes, train_set, config, rngs);
        let public = public.map_err(|e| abort(epoch, &record, e))?;
        let private = private.map_err(|e| abort(epoch, &record, e))?;

        let (m_utility, m_privacy) =
            utility_privacy_scores(public.final_estimate, private.final_estimate, h_public, h_private);
        record.epochs.push(EpochRecord {
            epoch,
            i_public: public.final_estimate,
            i_private: private.final_estimate,
            h_public,
            h_private,
            m_utility,
            m_privacy,
            q: m_privacy + config.lambda * m_utility,
        });
        record.traces.push((public.trace, private.trace));
        log::info!(
            "epoch {epoch}: I_L {:.4} I_S {:.4}",
            public.final_estimate,
            private.final_estimate
        );

        let mut step_rng = Prng::indexed(base, "encoder-step", epoch as u64);
        for _ in 0..config.steps_per_epoch {
            let step = (|| -> Result<()> {
                let batch = EncoderBatch::sample(train_set, config.step_batch(), &mut step_rng)?;
                let grads = encoder_loss_gradient(&encoder, &public.net, &private.net, &batch, config.lambda)?;
                adam_step(&mut encoder.net, &grads, &mut adam)
            })();
            step.map_err(|e| abort(epoch, &record, e))?;
        }
        critics = (Some(public.net), Some(private.net));
    }
    Ok((encoder, record))
}
