//! JSON model checkpoints.
//!
//! ```json
//! {
//!   "format": "infoshape-mlp",
//!   "version": 1,
//!   "kind": "encoder/synthetic",
//!   "layer_dims": [10, 10, 3],
//!   "activations": ["tanh", "tanh"],
//!   "params": [...],
//!   "config_hash": "sha256 hex"
//! }
//! ```
//!
//! `params` is flattened layer by layer: the weight matrix in row-major order
//! (`out_dim × in_dim`) followed by the bias vector. Floats are written in
//! shortest round-trip form so a load reproduces the network bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Mlp};
use crate::error::{Error, ParseError, Result};

pub const CHECKPOINT_FORMAT: &str = "infoshape-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: String,
    pub layer_dims: Vec<usize>,
    pub activations: Vec<Activation>,
    pub params: Vec<f64>,
    pub config_hash: String,
}

impl Checkpoint {
    pub fn from_mlp(net: &Mlp, kind: impl Into<String>, config_hash: impl Into<String>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_owned(),
            version: CHECKPOINT_VERSION,
            kind: kind.into(),
            layer_dims: net.layer_dims(),
            activations: net.activations(),
            params: net.to_flat(),
            config_hash: config_hash.into(),
        }
    }

    pub fn to_mlp(&self) -> Result<Mlp> {
        let mut net = Mlp::zeros(&self.layer_dims, &self.activations)?;
        net.set_flat(&self.params)?;
        if !net.is_finite() {
            return Err(Error::config("checkpoint holds non-finite parameters"));
        }
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, ParseError> {
        let ckpt: Checkpoint = serde_json::from_str(text).map_err(|e| ParseError::Malformed {
            line: e.line(),
            message: e.to_string(),
        })?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(ParseError::UnsupportedVersion(format!(
                "{} v{}",
                ckpt.format, ckpt.version
            )));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::parse(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Prng;

    #[test]
    fn round_trip_is_bitwise() {
        let net = Mlp::init(
            &[10, 10, 3],
            &[Activation::Tanh, Activation::Tanh],
            &mut Prng::new(4),
        )
        .unwrap();
        let ckpt = Checkpoint::from_mlp(&net, "encoder/synthetic", "abc");
        let back = Checkpoint::from_json(&ckpt.to_json()).unwrap();
        assert_eq!(back, ckpt);
        let restored = back.to_mlp().unwrap();
        let a: Vec<u64> = net.params().map(f64::to_bits).collect();
        let b: Vec<u64> = restored.params().map(f64::to_bits).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_wrong_version_and_shape() {
        let net = Mlp::zeros(&[2, 1], &[Activation::Identity]).unwrap();
        let mut ckpt = Checkpoint::from_mlp(&net, "x", "");
        ckpt.version = 9;
        assert!(matches!(
            Checkpoint::from_json(&ckpt.to_json()),
            Err(ParseError::UnsupportedVersion(_))
        ));
        ckpt.version = CHECKPOINT_VERSION;
        ckpt.params.pop();
        assert!(ckpt.to_mlp().is_err());
        assert!(Checkpoint::from_json("{ not json").is_err());
    }
}
