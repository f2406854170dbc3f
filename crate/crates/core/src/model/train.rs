use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::dataspace::{compute_counts, LabeledGroupedDataset};
use crate::error::{Error, Result};
use crate::losses::{Batch, LossContext, LossSpec};
use crate::metrics::EvalReport;
use crate::rng::{mix_seed, Stream};
use crate::scalar::Scalar;

use super::{gradient, ModelParams};

fn default_hidden_dim() -> usize {
    64
}
fn default_learning_rate() -> f64 {
    0.1
}
fn default_momentum() -> f64 {
    0.9
}
fn default_epochs() -> usize {
    50
}
fn default_batch_size() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_hidden_dim")]
    pub hidden_dim: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    /// Uniform init half-width; `1/sqrt(fan_in)` per layer when absent.
    #[serde(default)]
    pub init_scale: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dim: default_hidden_dim(),
            learning_rate: default_learning_rate(),
            momentum: default_momentum(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            seed: 0,
            init_scale: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be > 0", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} must lie in [0, 1)", self.momentum));
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if let Some(s) = self.init_scale {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("init_scale {s} must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    /// Dev macro-F per epoch, when a dev set was given.
    pub dev_f: Vec<Option<f64>>,
    /// Dev 1-GAP per epoch, for binary tasks over two groups.
    pub dev_fairness: Vec<Option<f64>>,
    pub updates: usize,
}

/// Mini-batch SGD with classical momentum (`v <- m v - lr g; θ <- θ + v`).
///
/// Parameters are initialized from `mix_seed(seed, 0)`; epoch `e` (1-based)
/// shuffles with `mix_seed(seed, e)`.
pub fn train<S: Scalar>(
    train_data: &LabeledGroupedDataset<S>,
    dev_data: Option<&LabeledGroupedDataset<S>>,
    spec: &LossSpec,
    config: &TrainConfig,
) -> Result<(ModelParams<S>, TrainHistory)> {
    config.validate()?;
    spec.validate()?;
    if train_data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let counts = compute_counts(train_data);
    let ctx = LossContext::new(*spec, &counts)?;

    let mut init_stream = Stream::new(mix_seed(config.seed, 0));
    let mut params = ModelParams::init(
        train_data.dim(),
        config.hidden_dim,
        train_data.num_classes(),
        spec.variant.needs_adversary().then_some(train_data.num_groups()),
        config.init_scale,
        &mut init_stream,
    );
    let mut velocity = params.zeros_like();
    let lr = S::lit(config.learning_rate);
    let momentum = S::lit(config.momentum);
    let n = train_data.len();

    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=config.epochs {
        Stream::new(mix_seed(config.seed, epoch as u64)).shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let features = train_data.features().select(Axis(0), chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| train_data.labels()[i]).collect();
            let groups: Vec<usize> = chunk.iter().map(|&i| train_data.groups()[i]).collect();
            let batch = Batch {
                features: features.view(),
                labels: &labels,
                groups: Some(&groups),
            };
            let (value, grads) = gradient(&params, &batch, &ctx)?;
            let total = value.total.as_f64();
            if !total.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            epoch_loss += total * chunk.len() as f64;

            for ((_, v), (_, g)) in velocity.blocks_mut().into_iter().zip(grads.blocks()) {
                for (vi, &gi) in v.iter_mut().zip(g) {
                    *vi = momentum * *vi - lr * gi;
                }
            }
            for ((_, p), (_, v)) in params.blocks_mut().into_iter().zip(velocity.blocks()) {
                for (pi, &vi) in p.iter_mut().zip(v) {
                    *pi += vi;
                }
            }
            history.updates += 1;
        }
        let epoch_loss = epoch_loss / n as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        history.train_loss.push(epoch_loss);

        let (dev_f, dev_fairness) = match dev_data.filter(|d| !d.is_empty()) {
            Some(dev) => dev_metrics(&params, dev)?,
            None => (None, None),
        };
        history.dev_f.push(dev_f);
        history.dev_fairness.push(dev_fairness);
    }
    if params.blocks().iter().any(|(_, v)| v.iter().any(|x| !x.is_finite())) {
        return Err(Error::Divergence {
            epoch: config.epochs,
        });
    }
    Ok((params, history))
}

fn dev_metrics<S: Scalar>(
    params: &ModelParams<S>,
    dev: &LabeledGroupedDataset<S>,
) -> Result<(Option<f64>, Option<f64>)> {
    let preds = params.predict(dev.features().view())?;
    if dev.num_classes() == 2 && dev.num_groups() == 2 {
        let report = EvalReport::compute(&preds, dev.labels(), dev.groups())?;
        Ok((Some(report.macro_f), Some(report.one_minus_gap)))
    } else {
        let f = crate::metrics::macro_f(&preds, dev.labels(), dev.num_classes())?;
        Ok((Some(f), None))
    }
}
