mod common;

use common::{skewed_counts, small_instance, spec_for};
use fairmargin::dataspace::{generate_synthetic, RatioSpec, SyntheticSpec};
use fairmargin::losses::{Batch, LossContext, LossSpec, LossVariant};
use fairmargin::model::{grad_check, gradient, train, TrainConfig};
use ndarray::Axis;
use proptest::prelude::*;

fn batch(inst: &common::Instance) -> Batch<'_, f64> {
    Batch {
        features: inst.x.view(),
        labels: &inst.labels,
        groups: Some(&inst.groups),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_variant_passes_grad_check(seed in any::<u64>()) {
        for variant in LossVariant::ALL {
            let inst = small_instance(seed, variant.needs_adversary());
            let ctx = LossContext::new(spec_for(variant), &skewed_counts()).unwrap();
            let err = grad_check(&inst.params, &batch(&inst), &ctx, 1e-5).unwrap();
            prop_assert!(err < 1e-4, "{} error {}", variant, err);
        }
    }

    #[test]
    fn forward_is_rowwise(seed in any::<u64>(), rot in 0usize..5) {
        let inst = small_instance(seed, true);
        let order: Vec<usize> = (0..5).map(|i| (i + rot) % 5).collect();
        let permuted = inst.x.select(Axis(0), &order);
        let a = inst.params.forward(inst.x.view()).unwrap();
        let b = inst.params.forward(permuted.view()).unwrap();
        prop_assert_eq!(a.logits.select(Axis(0), &order), b.logits);
        prop_assert_eq!(a.adv_logits.unwrap().select(Axis(0), &order), b.adv_logits.unwrap());
    }
}

#[test]
fn zero_margin_gradients_equal_cross_entropy_gradients() {
    let inst = small_instance(4, false);
    let grads = |variant, c| {
        let ctx = LossContext::new(LossSpec::new(variant).with_c(c), &skewed_counts()).unwrap();
        gradient(&inst.params, &batch(&inst), &ctx).unwrap().1
    };
    let a = grads(LossVariant::Ldam, 0.0);
    let b = grads(LossVariant::Vanilla, 0.0);
    for ((_, x), (_, y)) in a.blocks().iter().zip(b.blocks().iter()) {
        for (u, v) in x.iter().zip(y.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}

#[test]
fn coarser_step_is_not_more_accurate() {
    let inst = small_instance(8, true);
    let ctx = LossContext::new(spec_for(LossVariant::LdamAdv), &skewed_counts()).unwrap();
    let fine = grad_check(&inst.params, &batch(&inst), &ctx, 1e-5).unwrap();
    let coarse = grad_check(&inst.params, &batch(&inst), &ctx, 1e-3).unwrap();
    assert!(fine <= coarse * 1.5 + 1e-9, "fine {fine} coarse {coarse}");
}

#[test]
fn adversary_step_with_frozen_encoder_does_not_raise_its_loss() {
    for seed in 0..20 {
        let inst = small_instance(seed, true);
        let ctx = LossContext::new(spec_for(LossVariant::LdamAdv), &skewed_counts()).unwrap();
        let (before, grads) = gradient(&inst.params, &batch(&inst), &ctx).unwrap();
        let mut stepped = inst.params.clone();
        let adv = stepped.adversary.as_mut().unwrap();
        let g = grads.adversary.as_ref().unwrap();
        adv.w.scaled_add(-0.05, &g.w);
        adv.b.scaled_add(-0.05, &g.b);
        let (after, _) = gradient(&stepped, &batch(&inst), &ctx).unwrap();
        assert!(after.adversary <= before.adversary, "seed {seed}");
    }
}

fn separable(n: usize, seed: u64) -> fairmargin::Dataset {
    let spec = SyntheticSpec {
        dim: 4,
        class_separation: 6.0,
        group_shift: 1.0,
        noise_std: 1.0,
        ratios: RatioSpec {
            positive_fraction: 0.4,
            stereotype: vec![vec![0.3, 0.7], vec![0.6, 0.4]],
            target_size: n,
        },
    };
    generate_synthetic(&spec, seed).unwrap()
}

#[test]
fn training_is_pure_for_every_variant() {
    let data = separable(120, 1);
    let cfg = TrainConfig {
        hidden_dim: 6,
        epochs: 3,
        batch_size: 16,
        seed: 5,
        ..TrainConfig::default()
    };
    for variant in LossVariant::ALL {
        let spec = spec_for(variant);
        let (a, ha) = train(&data, Some(&data), &spec, &cfg).unwrap();
        let (b, hb) = train(&data, Some(&data), &spec, &cfg).unwrap();
        assert_eq!(a, b, "{variant}");
        assert_eq!(ha, hb);
        assert_eq!(ha.dev_f.len(), 3);
    }
}

#[test]
fn f32_training_learns_separable_data() {
    let data = separable(400, 2).cast::<f32>();
    let cfg = TrainConfig {
        hidden_dim: 8,
        epochs: 20,
        ..TrainConfig::default()
    };
    let (params, _) = train(&data, None, &LossSpec::new(LossVariant::Vanilla), &cfg).unwrap();
    let preds = params.predict(data.features().view()).unwrap();
    let correct = preds.iter().zip(data.labels()).filter(|(p, y)| p == y).count();
    assert!(correct as f64 / data.len() as f64 >= 0.95);
}
