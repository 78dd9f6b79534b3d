//! Comparison encoders: an untrained copy of the InfoShape architecture,
//! additive Gaussian noise, and the identity.

use rand_distr::{Distribution, StandardNormal};

use crate::data::{LabeledDataset, Provenance};
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::rng::{substream_key, Prng};
use crate::trainer::{ArchitecturePreset, EncoderModel};

/// Anything that maps a feature matrix to released features row by row.
pub trait Encoder {
    fn transform(&self, features: &Matrix) -> Result<Matrix>;
    fn provenance(&self) -> Provenance;
}

/// Applies `encoder` to every row; labels and row order are unchanged.
pub fn apply_encoder(encoder: &dyn Encoder, dataset: &LabeledDataset) -> Result<LabeledDataset> {
    let out = encoder.transform(dataset.features())?;
    dataset.with_features(out, encoder.provenance())
}

impl Encoder for EncoderModel {
    fn transform(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.input_dim() {
            return Err(Error::config(format!(
                "encoder expects {} features, got {}",
                self.input_dim(),
                features.cols()
            )));
        }
        self.encode(features)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Encoded
    }
}

/// Freshly initialised, never trained encoder of the given preset.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomEncoder(pub EncoderModel);

pub fn random_encoder(preset: ArchitecturePreset, seed: u64) -> Result<RandomEncoder> {
    let mut rng = Prng::substream(seed, "random-encoder");
    EncoderModel::from_preset(preset, &mut rng).map(RandomEncoder)
}

impl Encoder for RandomEncoder {
    fn transform(&self, features: &Matrix) -> Result<Matrix> {
        self.0.transform(features)
    }

    fn provenance(&self) -> Provenance {
        Provenance::BaselineRandom
    }
}

/// `x + ε`, `ε ~ N(0, σ² I)`; row `i` always gets the same noise for a given seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianNoiseEncoder {
    sigma: f64,
    key: u64,
}

pub const DEFAULT_NOISE_SIGMA: f64 = 1.0;

pub fn gaussian_noise_encoder(sigma: f64, seed: u64) -> Result<GaussianNoiseEncoder> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::config(format!("noise sigma must be positive, got {sigma}")));
    }
    Ok(GaussianNoiseEncoder {
        sigma,
        key: substream_key(seed, "noise"),
    })
}

impl GaussianNoiseEncoder {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Encoder for GaussianNoiseEncoder {
    fn transform(&self, features: &Matrix) -> Result<Matrix> {
        let mut out = features.clone();
        for r in 0..out.rows() {
            let mut rng = Prng::indexed(self.key, "sample", r as u64);
            for v in out.row_mut(r) {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v += self.sigma * e;
            }
        }
        Ok(out)
    }

    fn provenance(&self) -> Provenance {
        Provenance::BaselineNoise
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IdentityEncoder;

pub fn identity_encoder() -> IdentityEncoder {
    IdentityEncoder
}

impl Encoder for IdentityEncoder {
    fn transform(&self, features: &Matrix) -> Result<Matrix> {
        Ok(features.clone())
    }

    fn provenance(&self) -> Provenance {
        Provenance::Original
    }
}
