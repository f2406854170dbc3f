use fairmargin::inlp::*;
use fairmargin::rng::Stream;
use ndarray::{Array2, ArrayView2};
use proptest::prelude::*;

fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

fn check_projection(p: &Array2<f64>, w: ArrayView2<f64>) -> Result<(), TestCaseError> {
    prop_assert!(max_abs(&(p.dot(p) - p)) < 1e-8);
    prop_assert!(max_abs(&(p - &p.t())) < 1e-8);
    prop_assert!(max_abs(&w.dot(p)) < 1e-8 * (1.0 + max_abs(&w.to_owned())));
    Ok(())
}

/// Reps whose group is the sign of coordinate 0; every coordinate is
/// standard normal.
fn sign_reps(seed: u64, n: usize, h: usize) -> (Array2<f64>, Vec<usize>) {
    let mut s = Stream::new(seed);
    let reps = Array2::from_shape_fn((n, h), |_| s.normal());
    let groups = (0..n).map(|i| usize::from(reps[[i, 0]] > 0.0)).collect();
    (reps, groups)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_symmetric_idempotent_and_kills_w(
        rows in 1usize..4,
        h in 2usize..7,
        seed in any::<u64>(),
        dup in any::<bool>(),
    ) {
        let mut s = Stream::new(seed);
        let mut w = Array2::from_shape_fn((rows, h), |_| s.normal() * 3.0);
        if dup && rows > 1 {
            let first = w.row(0).to_owned();
            w.row_mut(rows - 1).assign(&(&first * 2.5));
        }
        let p = nullspace_projection(w.view()).unwrap();
        check_projection(&p, w.view())?;
    }

    #[test]
    fn every_iteration_removes_one_direction(seed in any::<u64>(), iters in 1usize..6) {
        let (reps, groups) = sign_reps(seed, 200, 6);
        let cfg = InlpConfig { max_iters: iters, stop_accuracy: Some(0.0), ..Default::default() };
        let state = inlp_run(reps.view(), &groups, &cfg).unwrap();
        prop_assert_eq!(state.iterations, iters);
        prop_assert_eq!(state.rank(), 6 - iters);
        prop_assert_eq!(state.accuracies.len(), iters);
        check_projection(&state.projection, state.removed.view())?;
        let gram = state.removed.dot(&state.removed.t());
        prop_assert!(max_abs(&(gram - Array2::<f64>::eye(iters))) < 1e-10);
    }
}

#[test]
fn directions_run_out_before_the_stop_criterion() {
    let (reps, groups) = sign_reps(3, 100, 3);
    let cfg = InlpConfig {
        max_iters: 10,
        stop_accuracy: Some(0.0),
        ..Default::default()
    };
    let state = inlp_run(reps.view(), &groups, &cfg).unwrap();
    assert!(state.rank_exhausted);
    assert_eq!(state.rank(), 0);
    assert!(max_abs(&state.projection) < 1e-8);
}

fn coin_flip(seed: u64, n: usize) -> (Array2<f64>, Vec<usize>) {
    let mut s = Stream::new(seed);
    let reps = Array2::from_shape_fn((n, 8), |_| s.normal());
    let groups = (0..n).map(|_| usize::from(s.uniform() < 0.5)).collect();
    (reps, groups)
}

#[test]
fn coin_flip_groups_are_not_learnable() {
    let (reps, groups) = coin_flip(31, 500);
    let clf = fit_linear_group_classifier(reps.view(), &groups, &SvmConfig::default()).unwrap();
    assert!(clf.train_accuracy <= 0.65, "{}", clf.train_accuracy);
}

// Training accuracy on unlearnable groups exceeds the majority fraction by
// roughly sqrt(h/n); the default margin of 0.02 absorbs that only once n is
// large relative to h.
#[test]
fn independent_groups_stop_at_the_first_fit() {
    for seed in 0..5 {
        let (reps, groups) = coin_flip(seed, 10_000);
        let state = inlp_run(reps.view(), &groups, &InlpConfig::default()).unwrap();
        assert_eq!(state.accuracies.len(), 1, "seed {seed}: {:?}", state.accuracies);
        assert_eq!(state.iterations, 0);
        assert_eq!(state.rank(), 8);
    }
}

#[test]
fn final_accuracy_is_at_most_the_first() {
    for seed in 0..5 {
        let (reps, groups) = sign_reps(seed, 300, 6);
        let cfg = InlpConfig {
            max_iters: 4,
            stop_accuracy: Some(0.0),
            ..Default::default()
        };
        let state = inlp_run(reps.view(), &groups, &cfg).unwrap();
        let refit = fit_linear_group_classifier(
            state.apply(reps.view()).view(),
            &groups,
            &SvmConfig::default(),
        )
        .unwrap();
        assert!(refit.train_accuracy <= state.accuracies[0]);
    }
}

#[test]
fn zero_iterations_are_rejected() {
    let (reps, groups) = sign_reps(1, 20, 3);
    let cfg = InlpConfig {
        max_iters: 0,
        ..Default::default()
    };
    assert!(inlp_run(reps.view(), &groups, &cfg).is_err());
}

#[test]
fn record_json_restores_the_state() {
    let (reps, groups) = sign_reps(9, 150, 5);
    let state = inlp_run(
        reps.view(),
        &groups,
        &InlpConfig {
            max_iters: 2,
            stop_accuracy: Some(0.0),
            ..Default::default()
        },
    )
    .unwrap();
    let text = fairmargin::json::to_json_string(&state.to_record()).unwrap();
    let back: ProjectionRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(back.to_state::<f64>().unwrap(), state);
}
