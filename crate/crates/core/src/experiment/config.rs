use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dataspace::{generate_synthetic, load_csv, LabeledGroupedDataset, SyntheticSpec};
use crate::error::{Error, Result};
use crate::losses::{LossSpec, LossVariant};
use crate::metrics::SelectionPolicy;
use crate::model::TrainConfig;
use crate::scalar::Scalar;

use super::Setting;

/// Where the instance pool comes from. Train, dev and test are all drawn
/// from this pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Csv {
        path: PathBuf,
        #[serde(default = "two")]
        num_groups: usize,
    },
}

fn two() -> usize {
    2
}

impl DataSource {
    pub fn load<S: Scalar>(&self, seed: u64) -> Result<LabeledGroupedDataset<S>> {
        match self {
            DataSource::Synthetic(spec) => generate_synthetic(spec, seed),
            DataSource::Csv { path, num_groups } => load_csv(path, 2, *num_groups),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InlpSettings {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_inlp_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub stop_accuracy: Option<f64>,
}

fn default_inlp_iters() -> usize {
    10
}

impl Default for InlpSettings {
    fn default() -> Self {
        Self {
            enabled: false,
            max_iters: default_inlp_iters(),
            stop_accuracy: None,
        }
    }
}

fn default_split() -> [f64; 3] {
    [0.6, 0.2, 0.2]
}

fn default_policy() -> SelectionPolicy {
    SelectionPolicy::HarmonicMean
}

/// One experiment: pool, splits and their compositions, objective, training
/// and optional nullspace projection.
///
/// The pool is split into train/dev/test parts by `split` fractions; train
/// and dev are then resampled to `setting` and test to `test_setting` (or
/// `setting` when absent) at the sizes in `sizes`. `train.seed` is ignored:
/// data streams derive from `seed`, training from `seed` and the config id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub setting: Setting,
    #[serde(default)]
    pub test_setting: Option<Setting>,
    pub sizes: SplitSizes,
    #[serde(default = "default_split")]
    pub split: [f64; 3],
    pub loss: LossSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub inlp: InlpSettings,
    /// Used when a sweep's rows are summarized into a table.
    #[serde(default = "default_policy")]
    pub selection: SelectionPolicy,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        self.train.validate()?;
        if let DataSource::Synthetic(spec) = &self.source {
            spec.validate()?;
        }
        if let DataSource::Csv { path, .. } = &self.source {
            if !path.exists() {
                return Err(Error::InvalidArgument(format!(
                    "data file {} does not exist",
                    path.display()
                )));
            }
        }
        self.setting.ratios(self.sizes.train.max(1))?;
        self.test_setting().ratios(self.sizes.test.max(1))?;
        if self.sizes.train == 0 || self.sizes.dev == 0 || self.sizes.test == 0 {
            return Err(Error::InvalidArgument("train, dev and test sizes must be positive".into()));
        }
        if self.split.iter().any(|f| f.is_nan() || *f <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "split fractions {:?} must all be positive",
                self.split
            )));
        }
        if self.inlp.enabled {
            if self.inlp.max_iters == 0 {
                return Err(Error::InvalidArgument("inlp.max_iters must be >= 1".into()));
            }
            if self.loss.variant != LossVariant::Vanilla {
                return Err(Error::InvalidArgument(format!(
                    "nullspace projection runs on a VANILLA encoder, config asks for {}",
                    self.loss.variant
                )));
            }
        }
        Ok(())
    }

    pub fn test_setting(&self) -> &Setting {
        self.test_setting.as_ref().unwrap_or(&self.setting)
    }

    /// Method label used in result rows.
    pub fn method(&self) -> &'static str {
        if self.inlp.enabled {
            "INLP"
        } else {
            self.loss.variant.name()
        }
    }
}
