mod common;

use common::synthetic_base;
use fairmargin::experiment::*;
use fairmargin::losses::{LossSpec, LossVariant};
use fairmargin::metrics::{pareto_frontier, SelectionPolicy};
use fairmargin::model::TrainConfig;

/// Small and fast variant of the synthetic setup.
fn quick(seed: u64) -> ExperimentConfig {
    let mut cfg = synthetic_base(seed);
    cfg.sizes = SplitSizes {
        train: 200,
        dev: 100,
        test: 100,
    };
    cfg.train = TrainConfig {
        hidden_dim: 8,
        epochs: 3,
        ..TrainConfig::default()
    };
    cfg
}

#[test]
fn same_config_same_row() {
    let mut cfg = quick(3);
    cfg.loss = LossSpec::new(LossVariant::LdamAdv).with_c(0.5).with_lambda(0.3);
    assert_eq!(run_experiment(&cfg, 4).unwrap(), run_experiment(&cfg, 4).unwrap());
}

#[test]
fn every_metric_is_a_rate() {
    for variant in LossVariant::ALL {
        let mut cfg = quick(1);
        cfg.loss = LossSpec::new(variant).with_c(0.5).with_rho(1.0).with_lambda(0.1);
        let row = run_experiment(&cfg, 0).unwrap();
        for v in [row.dev_f, row.dev_gap, row.test_f, row.test_gap] {
            assert!((0.0..=1.0).contains(&v), "{variant}: {v}");
        }
        assert_eq!(row.variant, variant.name());
    }
}

#[test]
fn errors_carry_the_config_id() {
    let mut cfg = quick(1);
    cfg.sizes.test = 100_000;
    let err = run_experiment(&cfg, 7).unwrap_err();
    assert!(err.to_string().starts_with("config 7:"), "{err}");
    assert_eq!(err.kind(), "insufficient_cell");
}

#[test]
fn sweep_echoes_axis_values_in_order() {
    let mut base = quick(2);
    base.loss = LossSpec::new(LossVariant::LdamReg).with_c(1.0);
    let grid = SweepGrid {
        rho: vec![0.0, 0.5, 5.0],
        ..SweepGrid::default()
    };
    let rows = run_sweep(&grid, &base).unwrap();
    let rhos: Vec<f64> = rows.iter().map(|r| r.rho).collect();
    assert_eq!(rhos, vec![0.0, 0.5, 5.0]);
    assert_eq!(rows.iter().map(|r| r.config_id).collect::<Vec<_>>(), vec![0, 1, 2]);
}

#[test]
fn sweep_enumeration_skips_inapplicable_axes() {
    let base = quick(0);
    let grid = SweepGrid {
        variants: vec![LossVariant::Vanilla, LossVariant::Ldam, LossVariant::LdamReg],
        c: vec![0.1, 1.0],
        rho: vec![0.1, 1.0, 10.0],
        lambda_adv: vec![0.5, 2.0],
        settings: vec![Setting::table1(0.5), Setting::table1(0.8)],
        ..SweepGrid::default()
    };
    let configs = grid.expand(&base);
    // Per setting: vanilla 1, LDAM 2 (C), LDAM_REG 2x3 (C x rho).
    assert_eq!(configs.len(), 2 * (1 + 2 + 6));
    assert_eq!(configs[0].setting, Setting::table1(0.5));
    assert_eq!(configs[9].setting, Setting::table1(0.8));
    assert_eq!(configs[3].loss.variant, LossVariant::LdamReg);
    assert_eq!((configs[3].loss.c, configs[3].loss.rho), (0.1, 0.1));
    assert_eq!((configs[4].loss.c, configs[4].loss.rho), (0.1, 1.0));
    assert_eq!((configs[6].loss.c, configs[6].loss.rho), (1.0, 0.1));
}

#[test]
fn sweep_is_repeatable_and_independent_of_threads() {
    let mut base = quick(5);
    base.loss = LossSpec::new(LossVariant::Ldam);
    let grid = SweepGrid {
        c: vec![0.01, 0.1, 1.0, 10.0],
        ..SweepGrid::default()
    };
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run_sweep(&grid, &base).unwrap());
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| run_sweep(&grid, &base).unwrap());
    assert_eq!(rows_to_csv(&one).unwrap(), rows_to_csv(&many).unwrap());
    assert_eq!(run_sweep(&grid, &base).unwrap(), one);
}

#[test]
fn failures_are_recorded_per_row() {
    let mut base = quick(5);
    base.loss = LossSpec::new(LossVariant::Ldam);
    let grid = SweepGrid {
        settings: vec![Setting::table1(0.5), Setting::named("95-95")],
        ..SweepGrid::default()
    };
    base.sizes.train = 1000;
    let rows = run_sweep(&grid, &base).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].is_ok());
    assert!(rows[1].error.as_deref().unwrap().contains("config 1"));
}

#[test]
fn default_grid_spans_the_search_ranges() {
    let g = SweepGrid::default_ranges();
    assert_eq!(g.c.len(), 10);
    assert_eq!((g.c[0], g.c[9]), (1e-2, 30.0));
    assert_eq!((g.rho[0], g.rho[9]), (1e-4, 1e2));
    assert_eq!((g.lambda_adv[0], g.lambda_adv[9]), (1e-4, 1e2));
    for w in g.rho.windows(2) {
        assert!((w[1] / w[0] - 10f64.powf(6.0 / 9.0)).abs() < 1e-9);
    }
}

#[test]
fn frontier_file_is_the_frontier_of_the_rows() {
    let mut base = quick(6);
    base.loss = LossSpec::new(LossVariant::LdamReg).with_c(0.5);
    let grid = SweepGrid {
        rho: vec![0.0, 0.1, 1.0, 10.0, 100.0],
        ..SweepGrid::default()
    };
    let rows = run_sweep(&grid, &base).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let rows_path = dir.path().join("rows.csv");
    write_rows_csv(&rows, &rows_path).unwrap();
    let back = read_rows_csv(&rows_path).unwrap();
    assert_eq!(back, rows);

    let front_path = dir.path().join("front.csv");
    let written = emit_frontier(&back, &front_path, EvalSplit::Test).unwrap();
    let points: Vec<_> = rows.iter().map(|r| r.test_point()).collect();
    assert_eq!(written, pareto_frontier(&points));
    let text = std::fs::read_to_string(&front_path).unwrap();
    assert_eq!(text.lines().count(), written.len() + 1);
    assert_eq!(text.lines().next().unwrap(), FRONTIER_HEADER);
}

#[test]
fn table_one_layout_has_a_row_per_ratio_and_method() {
    let mut base = quick(8);
    base.loss = LossSpec::new(LossVariant::LdamReg).with_c(0.5);
    let grid = SweepGrid {
        variants: vec![LossVariant::Vanilla, LossVariant::LdamReg],
        rho: vec![0.1, 10.0],
        settings: [0.5, 0.6, 0.7, 0.8].map(Setting::table1).to_vec(),
        ..SweepGrid::default()
    };
    let rows = run_sweep(&grid, &base).unwrap();
    let table = table_of(&rows, SelectionPolicy::HarmonicMean).unwrap();
    assert_eq!(table.len(), 8);
    for (i, ratio) in ["0.5", "0.6", "0.7", "0.8"].iter().enumerate() {
        assert_eq!(table[2 * i].setting, format!("table1({ratio})"));
        assert_eq!(table[2 * i].method, "VANILLA");
        assert_eq!(table[2 * i + 1].method, "LDAM_REG");
    }
}

#[test]
fn vanilla_on_unstereotyped_data_is_fair() {
    let row = run_experiment(&synthetic_base(0), 0).unwrap();
    assert!(1.0 - row.test_gap >= 0.9, "{row:?}");
}

#[test]
fn strong_mean_penalty_beats_none_under_stereotyping() {
    let mut wins = 0;
    for seed in 0..5 {
        let mut cfg = synthetic_base(seed);
        cfg.setting = Setting::table1(0.8);
        cfg.loss = LossSpec::new(LossVariant::LdamReg).with_c(1.0);
        let off = run_experiment(&cfg, 0).unwrap();
        cfg.loss.rho = 100.0;
        let on = run_experiment(&cfg, 0).unwrap();
        wins += usize::from(on.test_gap < off.test_gap);
    }
    assert!(wins >= 3, "{wins}/5");
}

#[test]
fn projection_improves_fairness_under_stereotyping() {
    let mut wins = 0;
    for seed in 0..5 {
        let mut cfg = synthetic_base(seed);
        cfg.setting = Setting::table1(0.8);
        let before = run_experiment(&cfg, 0).unwrap();
        cfg.inlp.enabled = true;
        let after = run_experiment(&cfg, 0).unwrap();
        assert_eq!(after.variant, "INLP");
        wins += usize::from(after.test_gap <= before.test_gap);
    }
    assert!(wins >= 3, "{wins}/5");
}
