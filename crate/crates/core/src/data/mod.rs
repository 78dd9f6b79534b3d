//! Labeled datasets: synthetic generation, MNIST ingestion, label rules,
//! stratified splits and the on-disk dataset format.

mod idx;
mod io;
mod labels;
mod split;
mod synthetic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;

pub use idx::{
    load_mnist_idx, parse_idx_images, parse_idx_labels, write_idx_images, write_idx_labels,
    DigitDataset, IdxImages, IMAGE_MAGIC, LABEL_MAGIC,
};
pub use io::{dataset_from_str, dataset_to_string, load_dataset, save_dataset, DATASET_HEADER};
pub use labels::{derive_labels, LabelRule};
pub use split::{split, split_indices};
pub use synthetic::{generate_synthetic, SyntheticSpec};

/// Where a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    /// 𝒫: samples with both labels used to design the encoder.
    DesignerSet,
    /// 𝒟: the data owner's sensitive samples.
    OwnerSet,
    /// Un-encoded features released as-is.
    Original,
    /// Codes from a trained encoder.
    Encoded,
    BaselineRandom,
    BaselineNoise,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::DesignerSet => "designer-set",
            Provenance::OwnerSet => "owner-set",
            Provenance::Original => "original",
            Provenance::Encoded => "encoded",
            Provenance::BaselineRandom => "baseline-random",
            Provenance::BaselineNoise => "baseline-noise",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "designer-set" => Provenance::DesignerSet,
            "owner-set" => Provenance::OwnerSet,
            "original" => Provenance::Original,
            "encoded" => Provenance::Encoded,
            "baseline-random" => Provenance::BaselineRandom,
            "baseline-noise" => Provenance::BaselineNoise,
            other => return Err(Error::config(format!("unknown provenance {other:?}"))),
        })
    }
}

/// Free-form generator metadata carried alongside the provenance tag.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub label_rule: Option<LabelRule>,
    /// e.g. `synthetic`, `mnist`, `encoder:<hash>`
    pub generator: String,
    pub seed: Option<u64>,
}

/// Feature matrix with a public label `L(x)` and private label `S(x)` per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Matrix,
    public_labels: Vec<u8>,
    private_labels: Vec<u8>,
    pub provenance: Provenance,
    pub meta: DatasetMeta,
}

impl LabeledDataset {
    pub fn new(
        features: Matrix,
        public_labels: Vec<u8>,
        private_labels: Vec<u8>,
        provenance: Provenance,
        meta: DatasetMeta,
    ) -> Result<Self> {
        let n = features.rows();
        if public_labels.len() != n || private_labels.len() != n {
            return Err(Error::config(format!(
                "{n} rows but {} public / {} private labels",
                public_labels.len(),
                private_labels.len()
            )));
        }
        if public_labels.iter().chain(&private_labels).any(|&l| l > 1) {
            return Err(Error::config("labels must be 0 or 1"));
        }
        if !features.is_finite() {
            return Err(Error::config("features must be finite"));
        }
        Ok(Self {
            features,
            public_labels,
            private_labels,
            provenance,
            meta,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn public_labels(&self) -> &[u8] {
        &self.public_labels
    }

    pub fn private_labels(&self) -> &[u8] {
        &self.private_labels
    }

    pub fn labels(&self, choice: LabelChoice) -> &[u8] {
        match choice {
            LabelChoice::Public => &self.public_labels,
            LabelChoice::Private => &self.private_labels,
        }
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(rows),
            public_labels: rows.iter().map(|&r| self.public_labels[r]).collect(),
            private_labels: rows.iter().map(|&r| self.private_labels[r]).collect(),
            provenance: self.provenance,
            meta: self.meta.clone(),
        }
    }

    /// Same labels and row order, new features.
    pub fn with_features(&self, features: Matrix, provenance: Provenance) -> Result<Self> {
        if features.rows() != self.len() {
            return Err(Error::config(format!(
                "replacement features have {} rows, dataset has {}",
                features.rows(),
                self.len()
            )));
        }
        Self::new(
            features,
            self.public_labels.clone(),
            self.private_labels.clone(),
            provenance,
            self.meta.clone(),
        )
    }
}

/// Which label a classifier or estimator targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelChoice {
    Public,
    Private,
}

impl LabelChoice {
    pub fn name(self) -> &'static str {
        match self {
            LabelChoice::Public => "public",
            LabelChoice::Private => "private",
        }
    }
}

impl fmt::Display for LabelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LabelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "public" => Ok(LabelChoice::Public),
            "private" => Ok(LabelChoice::Private),
            other => Err(Error::config(format!("label must be public or private, got {other:?}"))),
        }
    }
}
