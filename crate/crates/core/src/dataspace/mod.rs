//! Labeled, grouped feature data and the sampling protocols around it.

mod apportion;
mod io;
mod sampling;
mod synthetic;

pub use apportion::{cell_targets, largest_remainder};
pub use io::{load_csv, save_csv};
pub(crate) use io::format_f64;
pub use sampling::{resample_to_ratios, split};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Feature matrix with a class label and a group label per row.
///
/// Rows are instances. Labels lie in `0..num_classes`, groups in
/// `0..num_groups`, and every feature is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGroupedDataset<S> {
    features: Array2<S>,
    labels: Vec<usize>,
    groups: Vec<usize>,
    num_classes: usize,
    num_groups: usize,
}

impl<S: Scalar> LabeledGroupedDataset<S> {
    pub fn new(
        features: Array2<S>,
        labels: Vec<usize>,
        groups: Vec<usize>,
        num_classes: usize,
        num_groups: usize,
    ) -> Result<Self> {
        if num_classes < 2 || num_groups < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 classes and 2 groups, got {num_classes} and {num_groups}"
            )));
        }
        let n = features.nrows();
        if labels.len() != n || groups.len() != n {
            return Err(Error::Dimension(format!(
                "{} feature rows, {} labels, {} groups",
                n,
                labels.len(),
                groups.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y >= num_classes) {
            return Err(Error::InvalidArgument(format!(
                "row {i}: label {} out of range for {num_classes} classes",
                labels[i]
            )));
        }
        if let Some(i) = groups.iter().position(|&g| g >= num_groups) {
            return Err(Error::InvalidArgument(format!(
                "row {i}: group {} out of range for {num_groups} groups",
                groups[i]
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
        Ok(Self {
            features,
            labels,
            groups,
            num_classes,
            num_groups,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<S> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            groups: indices.iter().map(|&i| self.groups[i]).collect(),
            num_classes: self.num_classes,
            num_groups: self.num_groups,
        }
    }

    /// Stacks datasets with identical shape declarations.
    pub fn concat(parts: &[&Self]) -> Result<Self> {
        let first = parts.first().ok_or(Error::Empty("no datasets to concatenate"))?;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut groups = Vec::new();
        for p in parts {
            if p.dim() != first.dim()
                || p.num_classes != first.num_classes
                || p.num_groups != first.num_groups
            {
                return Err(Error::Dimension("datasets disagree on shape".into()));
            }
            rows.extend(p.features.iter().copied());
            labels.extend_from_slice(&p.labels);
            groups.extend_from_slice(&p.groups);
        }
        let features = Array2::from_shape_vec((labels.len(), first.dim()), rows)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        Ok(Self {
            features,
            labels,
            groups,
            num_classes: first.num_classes,
            num_groups: first.num_groups,
        })
    }

    pub fn cast<T: Scalar>(&self) -> LabeledGroupedDataset<T> {
        LabeledGroupedDataset {
            features: self.features.mapv(|v| T::lit(v.as_f64())),
            labels: self.labels.clone(),
            groups: self.groups.clone(),
            num_classes: self.num_classes,
            num_groups: self.num_groups,
        }
    }

    /// Row indices of every instance in cell `(class, group)`.
    pub(crate) fn cell_indices(&self) -> Vec<Vec<Vec<usize>>> {
        let mut cells = vec![vec![Vec::new(); self.num_groups]; self.num_classes];
        for (i, (&y, &g)) in self.labels.iter().zip(&self.groups).enumerate() {
            cells[y][g].push(i);
        }
        cells
    }
}

/// Per-class, per-group and per-cell tallies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGroupCounts {
    pub per_class: Vec<usize>,
    /// `per_cell[y][g]` is the number of instances with class `y` and group `g`.
    pub per_cell: Vec<Vec<usize>>,
    pub per_group: Vec<usize>,
    pub total: usize,
}

impl ClassGroupCounts {
    pub fn from_cells(per_cell: Vec<Vec<usize>>) -> Self {
        let num_groups = per_cell.first().map_or(0, Vec::len);
        let per_class: Vec<usize> = per_cell.iter().map(|row| row.iter().sum()).collect();
        let per_group = (0..num_groups)
            .map(|g| per_cell.iter().map(|row| row[g]).sum())
            .collect();
        let total = per_class.iter().sum();
        Self {
            per_class,
            per_cell,
            per_group,
            total,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.per_class.len()
    }

    pub fn num_groups(&self) -> usize {
        self.per_group.len()
    }
}

pub fn compute_counts<S: Scalar>(data: &LabeledGroupedDataset<S>) -> ClassGroupCounts {
    let mut cells = vec![vec![0usize; data.num_groups()]; data.num_classes()];
    for (&y, &g) in data.labels().iter().zip(data.groups()) {
        cells[y][g] += 1;
    }
    ClassGroupCounts::from_cells(cells)
}

/// Target class balance and within-class group composition for binary tasks.
///
/// Class 1 is the positive class. `stereotype[y][g]` is the fraction of
/// class `y` belonging to group `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSpec {
    pub positive_fraction: f64,
    pub stereotype: Vec<Vec<f64>>,
    pub target_size: usize,
}

impl RatioSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "positive_fraction {} must lie strictly inside (0, 1)",
                self.positive_fraction
            )));
        }
        if self.stereotype.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "stereotype needs one row per class (2), got {}",
                self.stereotype.len()
            )));
        }
        let groups = self.stereotype[0].len();
        if groups < 2 {
            return Err(Error::InvalidArgument("stereotype rows need at least 2 groups".into()));
        }
        for (y, row) in self.stereotype.iter().enumerate() {
            if row.len() != groups {
                return Err(Error::InvalidArgument("stereotype rows differ in length".into()));
            }
            if row.iter().any(|&f| !(f.is_finite() && f >= 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "stereotype row {y} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "stereotype row {y} sums to {sum}, expected 1"
                )));
            }
        }
        if self.target_size == 0 {
            return Err(Error::InvalidArgument("target_size must be positive".into()));
        }
        Ok(())
    }

    pub fn num_groups(&self) -> usize {
        self.stereotype.first().map_or(0, Vec::len)
    }

    /// `[negative, positive]` class fractions.
    pub fn class_fractions(&self) -> [f64; 2] {
        [1.0 - self.positive_fraction, self.positive_fraction]
    }

    pub fn with_size(&self, target_size: usize) -> Self {
        Self {
            target_size,
            ..self.clone()
        }
    }
}
