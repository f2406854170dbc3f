use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::scalar::Scalar;

use super::{cell_targets, LabeledGroupedDataset, RatioSpec};

/// Gaussian stand-in for encoder features.
///
/// Class means sit at `∓class_separation/2` on axis 0, group means at
/// `∓group_shift/2` on axis 1 (spread evenly for more than two groups), and
/// every coordinate carries isotropic noise of standard deviation `noise_std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub class_separation: f64,
    pub group_shift: f64,
    pub noise_std: f64,
    pub ratios: RatioSpec,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidArgument(format!("dim {} < 2", self.dim)));
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return Err(Error::InvalidArgument("class_separation must be >= 0".into()));
        }
        if !(self.group_shift >= 0.0 && self.group_shift.is_finite()) {
            return Err(Error::InvalidArgument("group_shift must be >= 0".into()));
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidArgument("noise_std must be > 0".into()));
        }
        self.ratios.validate()
    }

    fn group_offset(&self, group: usize, num_groups: usize) -> f64 {
        let t = group as f64 / (num_groups - 1) as f64;
        self.group_shift * (t - 0.5)
    }
}

pub fn generate_synthetic<S: Scalar>(
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<LabeledGroupedDataset<S>> {
    spec.validate()?;
    let targets = cell_targets(&spec.ratios)?;
    let num_groups = spec.ratios.num_groups();

    let mut cells: Vec<(usize, usize)> = Vec::with_capacity(spec.ratios.target_size);
    for (y, row) in targets.iter().enumerate() {
        for (g, &count) in row.iter().enumerate() {
            cells.extend(std::iter::repeat_n((y, g), count));
        }
    }
    let mut stream = Stream::new(seed);
    stream.shuffle(&mut cells);

    let n = cells.len();
    let mut features = Array2::<S>::zeros((n, spec.dim));
    for (mut row, &(y, g)) in features.outer_iter_mut().zip(&cells) {
        let class_mean = if y == 1 { 0.5 } else { -0.5 } * spec.class_separation;
        let group_mean = spec.group_offset(g, num_groups);
        for (j, v) in row.iter_mut().enumerate() {
            let mean = match j {
                0 => class_mean,
                1 => group_mean,
                _ => 0.0,
            };
            *v = S::lit(mean + spec.noise_std * stream.normal());
        }
    }
    let labels = cells.iter().map(|c| c.0).collect();
    let groups = cells.iter().map(|c| c.1).collect();
    LabeledGroupedDataset::new(features, labels, groups, 2, num_groups)
}
