use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataspace::{resample_to_ratios, split, LabeledGroupedDataset};
use crate::error::{Error, Result};
use crate::inlp::{apply_and_retrain, inlp_run, HeadConfig, InlpConfig, ProjectionState, SvmConfig, TaskHead};
use crate::losses::LossVariant;
use crate::metrics::EvalReport;
use crate::model::{train, Checkpoint, ModelParams, TrainHistory};
use crate::rng::mix_seed;

use super::{ExperimentConfig, ResultRow, Setting};

// Data streams use keys with the top bit set so they never collide with the
// per-row training keys (the config ids).
const POOL_KEY: u64 = 1 << 63;
const SPLIT_KEY: u64 = POOL_KEY + 1;
const TRAIN_KEY: u64 = POOL_KEY + 2;
const DEV_KEY: u64 = POOL_KEY + 3;
const TEST_KEY: u64 = POOL_KEY + 4;

pub struct Splits {
    pub train: LabeledGroupedDataset<f64>,
    pub dev: LabeledGroupedDataset<f64>,
    pub test: LabeledGroupedDataset<f64>,
}

/// Builds the pool, splits it and resamples each part to its composition.
pub fn prepare_data(config: &ExperimentConfig) -> Result<Splits> {
    config.validate()?;
    let seed = config.seed;
    let pool = config.source.load::<f64>(mix_seed(seed, POOL_KEY))?;
    let [train_part, dev_part, test_part] = split(&pool, config.split, mix_seed(seed, SPLIT_KEY))?;
    let train_ratios = config.setting.ratios(config.sizes.train)?;
    let dev_ratios = config.setting.ratios(config.sizes.dev)?;
    let test_ratios = config.test_setting().ratios(config.sizes.test)?;
    Ok(Splits {
        train: resample_to_ratios(&train_part, &train_ratios, mix_seed(seed, TRAIN_KEY))?,
        dev: resample_to_ratios(&dev_part, &dev_ratios, mix_seed(seed, DEV_KEY))?,
        test: resample_to_ratios(&test_part, &test_ratios, mix_seed(seed, TEST_KEY))?,
    })
}

pub struct Debias {
    pub state: ProjectionState<f64>,
    pub head: TaskHead<f64>,
}

pub struct TrainedModel {
    pub params: ModelParams<f64>,
    pub debias: Option<Debias>,
    pub history: TrainHistory,
}

impl TrainedModel {
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        match &self.debias {
            None => self.params.predict(x),
            Some(d) => {
                let hidden = self.params.hidden(x)?;
                Ok(d.head.predict(d.state.apply(hidden.view()).view()))
            }
        }
    }

    pub fn evaluate(&self, data: &LabeledGroupedDataset<f64>) -> Result<EvalReport> {
        let preds = self.predict(data.features().view())?;
        EvalReport::compute(&preds, data.labels(), data.groups())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let ckpt = Checkpoint::from_params(&self.params);
        match &self.debias {
            None => ckpt,
            Some(d) => ckpt.with_debias(d.state.to_record(), &d.head),
        }
    }
}

/// Fits the nullspace projection on the hidden layer of `params` over `data`
/// and retrains the task head on the projected representations.
pub fn debias(
    params: &ModelParams<f64>,
    data: &LabeledGroupedDataset<f64>,
    max_iters: usize,
    stop_accuracy: Option<f64>,
) -> Result<Debias> {
    let hidden = params.hidden(data.features().view())?;
    let cfg = InlpConfig {
        max_iters,
        stop_accuracy,
        svm: SvmConfig::default(),
    };
    let state = inlp_run(hidden.view(), data.groups(), &cfg)?;
    let head = apply_and_retrain(
        &state,
        hidden.view(),
        data.labels(),
        data.num_classes(),
        &HeadConfig::default(),
    )?;
    Ok(Debias { state, head })
}

/// Trains the configured model on `splits.train`, tracking dev metrics.
pub fn fit(config: &ExperimentConfig, config_id: usize, splits: &Splits) -> Result<TrainedModel> {
    let mut train_cfg = config.train.clone();
    train_cfg.seed = mix_seed(config.seed, config_id as u64);
    let (params, history) = train(&splits.train, Some(&splits.dev), &config.loss, &train_cfg)?;
    let debias = if config.inlp.enabled {
        Some(debias(
            &params,
            &splits.train,
            config.inlp.max_iters,
            config.inlp.stop_accuracy,
        )?)
    } else {
        None
    };
    Ok(TrainedModel {
        params,
        debias,
        history,
    })
}

fn try_run(config: &ExperimentConfig, config_id: usize) -> Result<(EvalReport, EvalReport)> {
    let splits = prepare_data(config)?;
    let model = fit(config, config_id, &splits)?;
    Ok((model.evaluate(&splits.dev)?, model.evaluate(&splits.test)?))
}

/// Runs one configuration end to end. Errors carry the config id.
pub fn run_experiment(config: &ExperimentConfig, config_id: usize) -> Result<ResultRow> {
    let (dev, test) = try_run(config, config_id).map_err(|e| Error::Config {
        config_id,
        source: Box::new(e),
    })?;
    let mut row = ResultRow::skeleton(config, config_id);
    row.dev_f = dev.macro_f;
    row.dev_gap = dev.gap;
    row.test_f = test.macro_f;
    row.test_gap = test.gap;
    Ok(row)
}

/// Hyperparameter axes. An axis only applies to variants that read it (C to
/// margin-based losses, `rho` to LDAM_REG, `lambda_adv` to LDAM_ADV,
/// `inlp_iters` to configs with projection enabled); an empty or
/// inapplicable axis keeps the base config's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    #[serde(default)]
    pub variants: Vec<LossVariant>,
    #[serde(default, alias = "C")]
    pub c: Vec<f64>,
    #[serde(default)]
    pub rho: Vec<f64>,
    #[serde(default, alias = "lambda")]
    pub lambda_adv: Vec<f64>,
    #[serde(default)]
    pub inlp_iters: Vec<usize>,
    #[serde(default)]
    pub settings: Vec<Setting>,
}

/// `n` log-spaced points from `lo` to `hi`, endpoints exact.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    _ if i == n - 1 => hi,
                    _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

impl SweepGrid {
    /// Ten log-spaced points per axis: C over [1e-2, 30], rho and lambda over
    /// [1e-4, 1e2]. Variants and settings are left to the base config.
    pub fn default_ranges() -> Self {
        Self {
            c: log_space(1e-2, 30.0, 10),
            rho: log_space(1e-4, 1e2, 10),
            lambda_adv: log_space(1e-4, 1e2, 10),
            inlp_iters: (1..=10).collect(),
            ..Self::default()
        }
    }

    /// Every config in enumeration order: settings, then variants, C, rho,
    /// lambda and INLP iterations, the last varying fastest.
    pub fn expand(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        fn axis<T: Clone>(values: &[T], applies: bool, base: T) -> Vec<T> {
            if applies && !values.is_empty() {
                values.to_vec()
            } else {
                vec![base]
            }
        }
        let settings = axis(&self.settings, true, base.setting.clone());
        let variants = axis(&self.variants, true, base.loss.variant);
        let mut out = Vec::new();
        for setting in &settings {
            for &variant in &variants {
                let cs = axis(&self.c, variant.uses_margins(), base.loss.c);
                let rhos = axis(&self.rho, variant == LossVariant::LdamReg, base.loss.rho);
                let lambdas = axis(
                    &self.lambda_adv,
                    variant == LossVariant::LdamAdv,
                    base.loss.lambda_adv,
                );
                let iters = axis(&self.inlp_iters, base.inlp.enabled, base.inlp.max_iters);
                for &c in &cs {
                    for &rho in &rhos {
                        for &lambda in &lambdas {
                            for &max_iters in &iters {
                                let mut cfg = base.clone();
                                cfg.setting = setting.clone();
                                cfg.loss.variant = variant;
                                cfg.loss.c = c;
                                cfg.loss.rho = rho;
                                cfg.loss.lambda_adv = lambda;
                                cfg.inlp.max_iters = max_iters;
                                out.push(cfg);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: &[f64], allow_zero: bool| -> Result<()> {
            match v.iter().find(|x| !(x.is_finite() && (**x > 0.0 || (allow_zero && **x == 0.0)))) {
                Some(bad) => Err(Error::InvalidArgument(format!("grid {name} value {bad} out of range"))),
                None => Ok(()),
            }
        };
        positive("C", &self.c, true)?;
        positive("rho", &self.rho, true)?;
        positive("lambda_adv", &self.lambda_adv, true)?;
        if self.inlp_iters.contains(&0) {
            return Err(Error::InvalidArgument("grid inlp_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Runs every config of the grid, in parallel, returning rows in enumeration
/// order. A failing config yields a row with its error recorded.
pub fn run_sweep(grid: &SweepGrid, base: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    grid.validate()?;
    let configs = grid.expand(base);
    Ok(configs
        .par_iter()
        .enumerate()
        .map(|(id, cfg)| {
            run_experiment(cfg, id).unwrap_or_else(|e| ResultRow::failed(cfg, id, e.to_string()))
        })
        .collect())
}
