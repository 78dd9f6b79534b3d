//! Finite-difference checks for the network and the encoder surrogate.

mod common;

use common::{mlp_fd_error, SurrogateInstance, ACTIVATIONS};
use infoshape::nn::Activation;
use infoshape::trainer::EncoderModel;
use proptest::prelude::*;

const REL: f64 = 1e-4;

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, ..ProptestConfig::default() })]

    #[test]
    fn mlp_gradients_match_finite_differences(
        d0 in 1usize..5,
        hidden in proptest::collection::vec(1usize..6, 0..3),
        d_out in 1usize..3,
        act_ids in proptest::collection::vec(0usize..4, 3),
        seed in any::<u64>(),
    ) {
        let mut dims = vec![d0];
        dims.extend(&hidden);
        dims.push(d_out);
        let acts: Vec<Activation> = (0..dims.len() - 1).map(|i| ACTIVATIONS[act_ids[i]]).collect();
        if let Some(err) = mlp_fd_error(&dims, &acts, seed) {
            prop_assert!(err < REL, "{dims:?} {acts:?}: {err}");
        }
    }
}

#[test]
fn every_activation_is_covered() {
    for (i, act) in ACTIVATIONS.into_iter().enumerate() {
        for (dims, acts) in [(vec![3, 4, 2], vec![act, Activation::Identity]), (vec![2, 3], vec![act])] {
            let err = (0..10)
                .find_map(|k| mlp_fd_error(&dims, &acts, 100 * i as u64 + k))
                .expect("some seed avoids the kink");
            assert!(err < REL, "{act:?}: {err}");
        }
    }
}

#[test]
fn encoder_gradient_matches_finite_differences() {
    for seed in 0..5 {
        let inst = SurrogateInstance::new(seed);
        for lambda in [1.0, 0.0, 2.5] {
            let err = inst.fd_error(lambda);
            assert!(err < REL, "seed {seed} λ {lambda}: {err}");
        }
    }
}

#[test]
fn lambda_zero_ignores_private_critic() {
    let inst = SurrogateInstance::new(7);
    let other = SurrogateInstance {
        private: SurrogateInstance::new(8).private,
        ..SurrogateInstance::new(7)
    };
    assert_eq!(inst.gradient(0.0), other.gradient(0.0));
    assert_eq!(inst.objective(&inst.encoder, 0.0), other.objective(&inst.encoder, 0.0));
    assert_ne!(inst.gradient(1.0), other.gradient(1.0));
}

#[test]
fn small_step_descends_the_surrogate() {
    let descended = (0..20)
        .filter(|seed| {
            let inst = SurrogateInstance::new(1000 + seed);
            let before = inst.objective(&inst.encoder, 1.0);
            let mut net = inst.encoder.net().clone();
            for (p, d) in net.params_mut().zip(inst.gradient(1.0)) {
                *p -= 1e-3 * d;
            }
            let stepped = EncoderModel::from_mlp(net, inst.encoder.preset()).unwrap();
            inst.objective(&stepped, 1.0) < before
        })
        .count();
    assert!(descended >= 18, "{descended}/20");
}
