//! Split and serialisation invariants.

use infoshape::data::{
    dataset_from_str, dataset_to_string, generate_synthetic, split_indices, DatasetMeta, LabeledDataset, Provenance,
    SyntheticSpec,
};
use infoshape::nn::Matrix;
use infoshape::Prng;
use proptest::prelude::*;

fn labelled(labels: &[(u8, u8)]) -> LabeledDataset {
    let n = labels.len();
    let x = Matrix::from_fn(n, 2, |r, c| (r * 2 + c) as f64);
    LabeledDataset::new(
        x,
        labels.iter().map(|p| p.0).collect(),
        labels.iter().map(|p| p.1).collect(),
        Provenance::DesignerSet,
        DatasetMeta::default(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn split_partitions_rows(
        labels in proptest::collection::vec((0u8..2, 0u8..2), 5..300),
        frac in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let ds = labelled(&labels);
        let (train, val) = split_indices(&ds, frac, &mut Prng::new(seed)).unwrap();
        prop_assert_eq!(val.len(), (labels.len() as f64 * frac).round() as usize);
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        let again = split_indices(&ds, frac, &mut Prng::new(seed)).unwrap();
        prop_assert_eq!(&again.1, &val);
    }
}

#[test]
fn synthetic_round_trips_through_text() {
    let ds = generate_synthetic(&SyntheticSpec {
        n_samples: 300,
        seed: 8,
        ..Default::default()
    })
    .unwrap();
    let back = dataset_from_str(&dataset_to_string(&ds)).unwrap();
    assert_eq!(back, ds);
}
