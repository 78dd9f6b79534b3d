//! Encoder training loop: bookkeeping, reproducibility and failure handling.

use infoshape::data::{DatasetMeta, LabelChoice, LabeledDataset, Provenance};
use infoshape::mi::{train_mi_estimator, MiEstimatorConfig, SampleSet};
use infoshape::nn::Matrix;
use infoshape::trainer::{
    encode_dataset, label_entropy, train_infoshape, train_infoshape_from, ArchitecturePreset, EncoderModel,
    TradeoffConfig,
};
use infoshape::{Error, Prng};

/// Public label from x0 + x2, private from x1; x3 is noise.
fn toy_set(n: usize, seed: u64) -> LabeledDataset {
    let mut rng = Prng::new(seed);
    let x = Matrix::from_fn(n, 4, |_, _| 2.0 * rng.next_f64() - 1.0);
    let public = (0..n).map(|r| u8::from(x.get(r, 0) + 0.5 * x.get(r, 2) > 0.0)).collect();
    let private = (0..n).map(|r| u8::from(x.get(r, 1) > 0.0)).collect();
    LabeledDataset::new(x, public, private, Provenance::DesignerSet, DatasetMeta::default()).unwrap()
}

fn small_config(epochs: usize, steps: usize) -> TradeoffConfig {
    TradeoffConfig {
        epochs,
        steps_per_epoch: steps,
        lr: 1e-2,
        estimator: MiEstimatorConfig {
            iterations: 60,
            lr: 3e-3,
            batch_size: 200,
            accumulation_window: 2,
            hidden: vec![16, 16],
            ..Default::default()
        },
        ..Default::default()
    }
}

fn custom_encoder(seed: u64) -> EncoderModel {
    EncoderModel::custom(&[4, 6, 2], &mut Prng::new(seed)).unwrap()
}

#[test]
fn zero_steps_leave_the_encoder_untouched() {
    let ds = toy_set(400, 1);
    let init = custom_encoder(2);
    let (enc, record) = train_infoshape_from(init.clone(), &ds, &small_config(1, 0), &mut Prng::new(3)).unwrap();
    assert_eq!(enc, init);
    assert_eq!(record.epochs.len(), 1);
}

#[test]
fn record_is_internally_consistent() {
    let ds = toy_set(400, 4);
    let cfg = TradeoffConfig {
        lambda: 0.7,
        ..small_config(3, 2)
    };
    let (_, record) = train_infoshape_from(custom_encoder(5), &ds, &cfg, &mut Prng::new(6)).unwrap();
    assert_eq!(record.epochs.len(), 3);
    assert_eq!(record.traces.len(), 3);
    let h_l = label_entropy(ds.public_labels()).unwrap();
    let h_s = label_entropy(ds.private_labels()).unwrap();
    for (i, e) in record.epochs.iter().enumerate() {
        assert_eq!(e.epoch, i + 1);
        // entropies are fixed by the labels, not the encoder
        assert_eq!((e.h_public, e.h_private), (h_l, h_s));
        assert!((e.m_utility - (e.i_public - h_l)).abs() < 1e-12);
        assert!((e.m_privacy - (h_s - e.i_private)).abs() < 1e-12);
        assert!((e.q - (e.m_privacy + 0.7 * e.m_utility)).abs() < 1e-12);
        assert_eq!(record.traces[i].0.raw.len(), 60);
    }
    let csv = record.to_csv();
    assert!(csv.starts_with("epoch,I_L,I_S,H_L,H_S,M_utility,M_privacy,Q\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn threads_do_not_change_results() {
    let ds = toy_set(400, 7);
    let seq = small_config(2, 3);
    let par = TradeoffConfig {
        parallel_estimators: true,
        ..seq.clone()
    };
    let a = train_infoshape_from(custom_encoder(8), &ds, &seq, &mut Prng::new(9)).unwrap();
    let b = train_infoshape_from(custom_encoder(8), &ds, &par, &mut Prng::new(9)).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
}

#[test]
fn divergence_aborts_with_the_completed_epochs() {
    let ds = toy_set(400, 10);
    let mut cfg = small_config(3, 1);
    cfg.estimator.divergence_cap = 1e-6;
    let aborted = train_infoshape_from(custom_encoder(11), &ds, &cfg, &mut Prng::new(12)).unwrap_err();
    assert_eq!(aborted.epoch, 1);
    assert!(aborted.record.epochs.is_empty());
    assert!(matches!(aborted.error, Error::Divergence { .. }), "{:?}", aborted.error);
}

#[test]
fn mismatched_input_dim_is_a_config_error() {
    let ds = toy_set(100, 13);
    let err = train_infoshape(&ds, ArchitecturePreset::Synthetic, &small_config(1, 1), &mut Prng::new(0)).unwrap_err();
    assert!(matches!(err.error, Error::Config(_)));
}

fn private_estimate(ds: &LabeledDataset, seed: u64) -> f64 {
    let beta = ds.labels(LabelChoice::Private).iter().map(|&l| f64::from(l)).collect();
    let mut set = SampleSet::new(ds.features().clone(), beta).unwrap();
    let cfg = MiEstimatorConfig {
        iterations: 300,
        lr: 3e-3,
        batch_size: 500,
        hidden: vec![32, 32],
        ..Default::default()
    };
    train_mi_estimator(&mut set, &cfg, &mut Prng::new(seed)).unwrap().final_estimate
}

#[test]
fn training_hides_private_information() {
    let ds = toy_set(1000, 14);
    let cfg = TradeoffConfig {
        lambda: 1.0,
        ..small_config(8, 15)
    };
    let (enc, _) = train_infoshape_from(custom_encoder(15), &ds, &cfg, &mut Prng::new(16)).unwrap();
    let released = encode_dataset(&enc, &ds).unwrap();
    let raw = private_estimate(&ds, 17);
    let coded = private_estimate(&released, 17);
    assert!(raw >= coded, "identity {raw} vs trained {coded}");
}
