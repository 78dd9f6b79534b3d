//! Statistical properties of the ReMINE estimator against exact oracles.

mod common;

use common::{gaussian_pairs, gaussian_set, sample_pmf};
use infoshape::mi::{exact_discrete_mi, train_mi_estimator, MiEstimatorConfig, SampleSet};
use infoshape::nn::Matrix;
use infoshape::Prng;

fn fast_config(iterations: usize, batch_size: usize) -> MiEstimatorConfig {
    MiEstimatorConfig {
        iterations,
        lr: 3e-3,
        batch_size,
        hidden: vec![32, 32],
        ..Default::default()
    }
}

fn estimate(set: &mut SampleSet, cfg: &MiEstimatorConfig, seed: u64) -> f64 {
    train_mi_estimator(set, cfg, &mut Prng::new(seed)).unwrap().final_estimate
}

#[test]
fn perfectly_correlated_fair_bits() {
    let pmf = vec![vec![0.5, 0.0], vec![0.0, 0.5]];
    let mut set = sample_pmf(&pmf, 4000, false, &mut Prng::new(1));
    let cfg = MiEstimatorConfig {
        hidden: vec![100, 100],
        ..fast_config(500, 1000)
    };
    let est = estimate(&mut set, &cfg, 2);
    assert!((0.55..=0.70).contains(&est), "{est}");
}

#[test]
fn independent_data_is_near_zero() {
    let mut rng = Prng::new(3);
    let n = 4000;
    let alpha = Matrix::from_fn(n, 3, |_, _| rng.next_f64());
    let beta = (0..n).map(|_| f64::from(u8::from(rng.next_f64() < 0.5))).collect();
    let mut set = SampleSet::new(alpha, beta).unwrap();
    let est = estimate(&mut set, &fast_config(400, 1000), 4);
    assert!(est.abs() <= 0.05, "{est}");
}

#[test]
fn sign_discretised_gaussian_matches_discrete_oracle() {
    let rho: f64 = 0.9;
    let n = 8000;
    let (xs, ys) = gaussian_pairs(rho, n, &mut Prng::new(5));
    let alpha = xs.iter().map(|&x| f64::from(u8::from(x > 0.0))).collect();
    let beta = ys.iter().map(|&y| f64::from(u8::from(y > 0.0))).collect();
    // P(sign agree) = 1/2 + asin(ρ)/π
    let agree = 0.5 + rho.asin() / std::f64::consts::PI;
    let exact = exact_discrete_mi(&[vec![agree / 2.0, (1.0 - agree) / 2.0], vec![(1.0 - agree) / 2.0, agree / 2.0]]).unwrap();
    let mut set = SampleSet::new(Matrix::from_vec(n, 1, alpha).unwrap(), beta).unwrap();
    let est = estimate(&mut set, &fast_config(400, 1000), 6);
    assert!((est - exact).abs() <= 0.1, "estimate {est}, exact {exact}");
}

#[test]
fn estimates_stay_below_the_truth() {
    let pmf = vec![vec![0.35, 0.15], vec![0.1, 0.4]];
    let exact = exact_discrete_mi(&pmf).unwrap();
    let below = (0..20u64)
        .filter(|&seed| {
            let mut set = sample_pmf(&pmf, 2000, false, &mut Prng::new(100 + seed));
            estimate(&mut set, &fast_config(200, 500), 200 + seed) <= exact + 0.05
        })
        .count();
    assert!(below >= 19, "{below}/20 runs within exact + 0.05");
}

fn final_quarter_std(reg: f64) -> f64 {
    let mut set = gaussian_set(0.8, 4000, &mut Prng::new(9));
    let cfg = MiEstimatorConfig {
        reg_coefficient: reg,
        ..fast_config(400, 500)
    };
    let est = train_mi_estimator(&mut set, &cfg, &mut Prng::new(10)).unwrap();
    let tail = &est.trace.raw[est.trace.raw.len() * 3 / 4..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    (tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / tail.len() as f64).sqrt()
}

#[test]
fn regulariser_steadies_the_trace() {
    let with = final_quarter_std(0.1);
    let without = final_quarter_std(0.0);
    assert!(with < without, "std with reg {with}, without {without}");
}

#[test]
fn runs_are_reproducible() {
    let pmf = vec![vec![0.4, 0.1], vec![0.1, 0.4]];
    let cfg = fast_config(30, 200);
    let a = train_mi_estimator(&mut sample_pmf(&pmf, 500, false, &mut Prng::new(1)), &cfg, &mut Prng::new(2)).unwrap();
    let b = train_mi_estimator(&mut sample_pmf(&pmf, 500, false, &mut Prng::new(1)), &cfg, &mut Prng::new(2)).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.net, b.net);
}
