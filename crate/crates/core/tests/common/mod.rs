#![allow(dead_code)]

use fairmargin::dataspace::{ClassGroupCounts, RatioSpec, SyntheticSpec};
use fairmargin::experiment::{DataSource, ExperimentConfig, Setting, SplitSizes};
use fairmargin::losses::{LossSpec, LossVariant};
use fairmargin::metrics::SelectionPolicy;
use fairmargin::model::{ModelParams, TrainConfig};
use fairmargin::rng::Stream;
use ndarray::Array2;

/// Random small network and batch: d=3, h=4, K=2, G=2, n=5. Every cell gets
/// at least one instance so every weighting scheme is defined.
pub struct Instance {
    pub params: ModelParams<f64>,
    pub x: Array2<f64>,
    pub labels: Vec<usize>,
    pub groups: Vec<usize>,
}

pub fn small_instance(seed: u64, with_adversary: bool) -> Instance {
    let mut s = Stream::new(seed);
    let mut params =
        ModelParams::init(3, 4, 2, with_adversary.then_some(2), Some(0.8), &mut s);
    params.b1.mapv_inplace(|_| s.symmetric(0.5));
    params.b2.mapv_inplace(|_| s.symmetric(0.5));
    if let Some(adv) = params.adversary.as_mut() {
        adv.b.mapv_inplace(|_| s.symmetric(0.5));
    }
    let x = Array2::from_shape_fn((5, 3), |_| s.normal());
    let mut labels = vec![0, 0, 1, 1, 0];
    let mut groups = vec![0, 1, 0, 1, 1];
    labels[4] = usize::from(s.uniform() < 0.5);
    groups[4] = usize::from(s.uniform() < 0.5);
    Instance {
        params,
        x,
        labels,
        groups,
    }
}

/// Counts that make every weight and margin nontrivial.
pub fn skewed_counts() -> ClassGroupCounts {
    ClassGroupCounts::from_cells(vec![vec![30, 10], vec![4, 16]])
}

pub fn spec_for(variant: LossVariant) -> LossSpec {
    LossSpec::new(variant)
        .with_c(0.7)
        .with_rho(0.9)
        .with_lambda(0.6)
        .with_gamma(1.5)
        .with_beta(0.99)
}

/// Synthetic experiment used by the trend checks: 8-dimensional features,
/// class signal on one axis, group signal on another, a class- and
/// stereotype-balanced pool of 8000, and a balanced test set.
pub fn synthetic_base(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        source: DataSource::Synthetic(SyntheticSpec {
            dim: 8,
            class_separation: 2.0,
            group_shift: 3.0,
            noise_std: 1.0,
            ratios: RatioSpec {
                positive_fraction: 0.5,
                stereotype: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
                target_size: 8000,
            },
        }),
        setting: Setting::table1(0.5),
        test_setting: Some(Setting::table1(0.5)),
        sizes: SplitSizes {
            train: 1000,
            dev: 500,
            test: 1000,
        },
        split: [0.6, 0.2, 0.2],
        loss: LossSpec::new(LossVariant::Vanilla),
        train: TrainConfig {
            hidden_dim: 32,
            epochs: 30,
            ..TrainConfig::default()
        },
        inlp: Default::default(),
        selection: SelectionPolicy::HarmonicMean,
        seed,
    }
}
