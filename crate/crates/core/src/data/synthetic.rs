//! Gaussian clusters on hypercube vertices, in the style of
//! scikit-learn's `make_classification`.
//!
//! Steps, all drawn from one seeded stream:
//! 1. pick `n_classes · clusters_per_class` distinct vertices of the
//!    `n_informative`-cube with side `hypercube_side` (a random permutation);
//! 2. per cluster, informative features = `z · A + vertex` with `z` standard
//!    normal and `A` a cluster-specific matrix with entries uniform in `[−1, 1]`;
//! 3. redundant features = informative · `B`, `B` shared, entries uniform in `[−1, 1]`;
//! 4. noise features standard normal;
//! 5. each sample's class is re-drawn uniformly over all classes with
//!    probability `1 − same_class_fraction`;
//! 6. rows and feature columns are shuffled;
//! 7. classes become (public, private) bits via [`LabelRule::BitSplit`].

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::labels::{derive_labels, LabelRule};
use super::{DatasetMeta, LabeledDataset, Provenance};
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::rng::Prng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_informative: usize,
    pub n_redundant: usize,
    pub n_noise: usize,
    pub n_classes: usize,
    pub clusters_per_class: usize,
    pub hypercube_side: f64,
    pub same_class_fraction: f64,
    /// Standardise every feature column to zero mean and unit variance.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            n_features: 10,
            n_informative: 3,
            n_redundant: 2,
            n_noise: 5,
            n_classes: 4,
            clusters_per_class: 2,
            hypercube_side: 2.0,
            same_class_fraction: 0.99,
            standardize: false,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_informative + self.n_redundant + self.n_noise != self.n_features {
            return Err(Error::usage(format!(
                "informative + redundant + noise = {} but n_features = {}",
                self.n_informative + self.n_redundant + self.n_noise,
                self.n_features
            )));
        }
        if self.n_informative == 0 || self.n_informative > 30 {
            return Err(Error::usage("n_informative must be in 1..=30"));
        }
        let clusters = self.n_classes * self.clusters_per_class;
        if clusters == 0 || clusters > 1usize << self.n_informative {
            return Err(Error::usage(format!(
                "{clusters} clusters do not fit on the {} vertices of a {}-cube",
                1usize << self.n_informative,
                self.n_informative
            )));
        }
        if self.n_classes != 4 {
            return Err(Error::usage("bit-split labels need exactly 4 classes"));
        }
        if self.n_samples < clusters {
            return Err(Error::usage("fewer samples than clusters"));
        }
        if !(self.hypercube_side > 0.0) || !(0.0..=1.0).contains(&self.same_class_fraction) {
            return Err(Error::usage(
                "hypercube_side must be positive and same_class_fraction in [0, 1]",
            ));
        }
        Ok(())
    }
}

/// Features plus the 4-ary class of every row, before label derivation.
pub(crate) fn generate_classes(spec: &SyntheticSpec) -> Result<(Matrix, Vec<u8>)> {
    spec.validate()?;
    let mut rng = Prng::substream(spec.seed, "synthetic");
    let n_inf = spec.n_informative;
    let n_clusters = spec.n_classes * spec.clusters_per_class;

    // 1. vertex assignment
    let mut vertex_ids: Vec<usize> = (0..1usize << n_inf).collect();
    vertex_ids.shuffle(&mut rng);
    let half = spec.hypercube_side / 2.0;
    let vertices: Vec<Vec<f64>> = vertex_ids[..n_clusters]
        .iter()
        .map(|&v| {
            (0..n_inf)
                .map(|bit| if v >> bit & 1 == 1 { half } else { -half })
                .collect()
        })
        .collect();

    let uniform_pm1 = |rng: &mut Prng| 2.0 * rng.next_f64() - 1.0;
    let mixing: Vec<Matrix> = (0..n_clusters)
        .map(|_| Matrix::from_fn(n_inf, n_inf, |_, _| uniform_pm1(&mut rng)))
        .collect();
    let redundant_map = Matrix::from_fn(n_inf, spec.n_redundant, |_, _| uniform_pm1(&mut rng));

    // samples per cluster, remainder to the first clusters
    let base = spec.n_samples / n_clusters;
    let extra = spec.n_samples % n_clusters;

    let n = spec.n_samples;
    let d = spec.n_features;
    let mut features = Matrix::zeros(n, d);
    let mut classes = Vec::with_capacity(n);
    let mut row = 0;
    for cluster in 0..n_clusters {
        let count = base + usize::from(cluster < extra);
        let class = (cluster % spec.n_classes) as u8;
        for _ in 0..count {
            let z: Vec<f64> = (0..n_inf).map(|_| StandardNormal.sample(&mut rng)).collect();
            let out = features.row_mut(row);
            for j in 0..n_inf {
                let mut v = vertices[cluster][j];
                for (k, zk) in z.iter().enumerate() {
                    v += zk * mixing[cluster].get(k, j);
                }
                out[j] = v;
            }
            for r in 0..spec.n_redundant {
                let mut v = 0.0;
                for j in 0..n_inf {
                    v += out[j] * redundant_map.get(j, r);
                }
                out[n_inf + r] = v;
            }
            for k in 0..spec.n_noise {
                out[n_inf + spec.n_redundant + k] = StandardNormal.sample(&mut rng);
            }
            classes.push(class);
            row += 1;
        }
    }

    // 5. label noise
    for c in classes.iter_mut() {
        if rng.next_f64() >= spec.same_class_fraction {
            *c = (rng.next_f64() * spec.n_classes as f64) as u8;
        }
    }

    // 6. shuffle rows and columns
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut columns: Vec<usize> = (0..d).collect();
    columns.shuffle(&mut rng);
    let mut shuffled = Matrix::from_fn(n, d, |r, c| features.get(order[r], columns[c]));
    let classes: Vec<u8> = order.iter().map(|&r| classes[r]).collect();

    if spec.standardize {
        standardize_columns(&mut shuffled);
    }
    Ok((shuffled, classes))
}

fn standardize_columns(m: &mut Matrix) {
    let n = m.rows() as f64;
    for c in 0..m.cols() {
        let mean = (0..m.rows()).map(|r| m.get(r, c)).sum::<f64>() / n;
        let var = (0..m.rows()).map(|r| (m.get(r, c) - mean).powi(2)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for r in 0..m.rows() {
            m.set(r, c, (m.get(r, c) - mean) / sd);
        }
    }
}

/// Generates the 4-class set with bit-split labels.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    let (features, classes) = generate_classes(spec)?;
    let (public, private) = derive_labels(&classes, LabelRule::BitSplit)?;
    LabeledDataset::new(
        features,
        public,
        private,
        Provenance::DesignerSet,
        DatasetMeta {
            label_rule: Some(LabelRule::BitSplit),
            generator: "synthetic".to_owned(),
            seed: Some(spec.seed),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec {
            n_samples: 500,
            seed: 3,
            ..Default::default()
        };
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
        let other = SyntheticSpec { seed: 4, ..spec };
        assert_ne!(
            generate_synthetic(&spec).unwrap().features(),
            generate_synthetic(&other).unwrap().features()
        );
    }

    #[test]
    fn shapes_and_balance() {
        let spec = SyntheticSpec {
            seed: 11,
            ..Default::default()
        };
        let (x, classes) = generate_classes(&spec).unwrap();
        assert_eq!(x.shape(), (10_000, 10));
        for c in 0..4u8 {
            let count = classes.iter().filter(|&&k| k == c).count();
            assert!((2350..=2650).contains(&count), "class {c}: {count}");
        }
        let ds = generate_synthetic(&spec).unwrap();
        for labels in [ds.public_labels(), ds.private_labels()] {
            let ones = labels.iter().filter(|&&l| l == 1).count() as f64 / 10_000.0;
            assert!((ones - 0.5).abs() <= 0.03, "{ones}");
        }
    }

    #[test]
    fn invalid_specs() {
        let bad = SyntheticSpec {
            n_noise: 4,
            ..Default::default()
        };
        assert!(matches!(generate_synthetic(&bad), Err(Error::Usage(_))));
        let too_many = SyntheticSpec {
            n_informative: 2,
            n_redundant: 3,
            ..Default::default()
        };
        assert!(generate_synthetic(&too_many).is_err());
    }

    #[test]
    fn standardize_flag() {
        let spec = SyntheticSpec {
            n_samples: 2000,
            standardize: true,
            ..Default::default()
        };
        let ds = generate_synthetic(&spec).unwrap();
        let x = ds.features();
        for c in 0..x.cols() {
            let mean = (0..x.rows()).map(|r| x.get(r, c)).sum::<f64>() / 2000.0;
            assert!(mean.abs() < 1e-10);
        }
    }
}
