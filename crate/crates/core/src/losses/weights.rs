use serde::{Deserialize, Serialize};

use crate::dataspace::ClassGroupCounts;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-class margins `C / n_j^{1/4}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginVector<S> {
    pub delta: Vec<S>,
}

pub fn ldam_margins<S: Scalar>(counts: &ClassGroupCounts, c: f64) -> Result<MarginVector<S>> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::InvalidArgument(format!("margin scale C = {c} must be >= 0")));
    }
    let delta = counts
        .per_class
        .iter()
        .enumerate()
        .map(|(j, &n)| match n {
            0 if c > 0.0 => Err(Error::EmptyClass(j)),
            0 => Ok(S::zero()),
            // Two square roots are exact for perfect fourth powers.
            _ => Ok(S::lit(c / (n as f64).sqrt().sqrt())),
        })
        .collect::<Result<_>>()?;
    Ok(MarginVector { delta })
}

/// `(1 - beta) / (1 - beta^n)`, and 0 for an empty cell.
pub fn smoothed_inverse_frequency(n: usize, beta: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let one_minus_beta = 1.0 - beta;
    // 1 - beta^n = -expm1(n ln beta), accurate when beta is close to 1.
    let denom = -(n as f64 * (beta - 1.0).ln_1p()).exp_m1();
    one_minus_beta / denom
}

/// Inverse class frequency `N / n_j`, scaled so the weights average to 1
/// across classes.
pub fn class_weights(counts: &ClassGroupCounts) -> Result<Vec<f64>> {
    if let Some(j) = counts.per_class.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(j));
    }
    let total = counts.total as f64;
    let raw: Vec<f64> = counts.per_class.iter().map(|&n| total / n as f64).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    Ok(raw.into_iter().map(|w| w / mean).collect())
}

/// Smoothed inverse-frequency cell weights, normalized to dataset mean 1.
pub fn group_instance_weights(counts: &ClassGroupCounts, beta: f64) -> Result<WeightTable> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must lie in [0, 1)")));
    }
    let raw = counts
        .per_cell
        .iter()
        .map(|row| row.iter().map(|&n| smoothed_inverse_frequency(n, beta)).collect())
        .collect();
    WeightTable::normalized(counts, raw)
}

/// Instance weights per `(class, group)` cell.
///
/// `group_w[y][g]` is the weight of every instance in that cell; `class_w[y]`
/// is the mean weight of class `y`. Tables built here have mean instance
/// weight 1 over the counts they were built from; empty cells weigh 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    pub class_w: Vec<f64>,
    pub group_w: Vec<Vec<f64>>,
}

impl WeightTable {
    /// All-ones table.
    pub fn uniform(num_classes: usize, num_groups: usize) -> Self {
        Self {
            class_w: vec![1.0; num_classes],
            group_w: vec![vec![1.0; num_groups]; num_classes],
        }
    }

    /// Inverse class proportion, as used by the class-weighted losses.
    pub fn class_balanced(counts: &ClassGroupCounts) -> Result<Self> {
        let w = class_weights(counts)?;
        let raw = w
            .iter()
            .map(|&wy| vec![wy; counts.num_groups()])
            .collect();
        Self::normalized(counts, raw)
    }

    /// Inverse joint class-group proportion `N / N_{y,g}`.
    pub fn cell_balanced(counts: &ClassGroupCounts) -> Result<Self> {
        let total = counts.total as f64;
        let raw = counts
            .per_cell
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&n| if n == 0 { 0.0 } else { total / n as f64 })
                    .collect()
            })
            .collect();
        Self::normalized(counts, raw)
    }

    fn normalized(counts: &ClassGroupCounts, mut raw: Vec<Vec<f64>>) -> Result<Self> {
        let mass: f64 = counts
            .per_cell
            .iter()
            .zip(&raw)
            .flat_map(|(n_row, w_row)| n_row.iter().zip(w_row).map(|(&n, &w)| n as f64 * w))
            .sum();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Empty("no instances to normalize weights over"));
        }
        let scale = counts.total as f64 / mass;
        for row in raw.iter_mut() {
            for w in row.iter_mut() {
                *w *= scale;
            }
        }
        let class_w = counts
            .per_cell
            .iter()
            .zip(&raw)
            .map(|(n_row, w_row)| {
                let n: usize = n_row.iter().sum();
                if n == 0 {
                    0.0
                } else {
                    n_row.iter().zip(w_row).map(|(&c, &w)| c as f64 * w).sum::<f64>() / n as f64
                }
            })
            .collect();
        Ok(Self {
            class_w,
            group_w: raw,
        })
    }

    pub fn weight(&self, class: usize, group: usize) -> f64 {
        self.group_w[class][group]
    }

    /// Mean instance weight over a dataset with these counts.
    pub fn dataset_mean(&self, counts: &ClassGroupCounts) -> f64 {
        let mass: f64 = counts
            .per_cell
            .iter()
            .zip(&self.group_w)
            .flat_map(|(n_row, w_row)| n_row.iter().zip(w_row).map(|(&n, &w)| n as f64 * w))
            .sum();
        mass / counts.total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(cells: Vec<Vec<usize>>) -> ClassGroupCounts {
        ClassGroupCounts::from_cells(cells)
    }

    #[test]
    fn margin_examples() {
        let c = counts(vec![vec![8, 8], vec![40, 41]]);
        let m: MarginVector<f64> = ldam_margins(&c, 1.0).unwrap();
        assert_eq!(m.delta, vec![0.5, 1.0 / 3.0]);
        let m: MarginVector<f64> = ldam_margins(&c, 0.0).unwrap();
        assert_eq!(m.delta, vec![0.0, 0.0]);
        let ones = counts(vec![vec![1, 0], vec![0, 1]]);
        let m: MarginVector<f64> = ldam_margins(&ones, 2.0).unwrap();
        assert_eq!(m.delta, vec![2.0, 2.0]);
    }

    #[test]
    fn empty_class_margin_is_an_error() {
        let c = counts(vec![vec![0, 0], vec![3, 4]]);
        assert!(matches!(ldam_margins::<f64>(&c, 1.0), Err(Error::EmptyClass(0))));
        assert!(ldam_margins::<f64>(&c, 0.0).is_ok());
    }

    #[test]
    fn smoothed_weight_closed_forms() {
        let beta = 0.9999;
        assert!((smoothed_inverse_frequency(1, beta) - 1.0).abs() < 1e-12);
        assert!((smoothed_inverse_frequency(2, beta) - 1.0 / (1.0 + beta)).abs() < 1e-12);
        assert_eq!(smoothed_inverse_frequency(0, beta), 0.0);
        assert_eq!(smoothed_inverse_frequency(5, 0.0), 1.0);
    }

    #[test]
    fn smoothed_weight_large_cell() {
        // (1 - b) / (1 - b^10000) for b = 0.9999_f64, evaluated with 50-digit arithmetic.
        let expected = 1.581_930_672_610_976_4e-4;
        let got = smoothed_inverse_frequency(10_000, 0.9999);
        assert!(((got - expected) / expected).abs() < 1e-9, "{got}");
    }

    #[test]
    fn class_weight_examples() {
        let w = class_weights(&counts(vec![vec![5, 5], vec![15, 15]])).unwrap();
        assert!((w[0] - 1.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
        let w = class_weights(&counts(vec![vec![7, 3], vec![4, 6]])).unwrap();
        assert_eq!(w, vec![1.0, 1.0]);
        let w = class_weights(&counts(vec![vec![1, 0], vec![500, 499]])).unwrap();
        assert!((w[0] / w[1] - 999.0).abs() < 1e-9);
        assert!(class_weights(&counts(vec![vec![0, 0], vec![1, 1]])).is_err());
    }

    #[test]
    fn tables_have_unit_dataset_mean() {
        let c = counts(vec![vec![10, 90], vec![810, 90]]);
        for table in [
            WeightTable::class_balanced(&c).unwrap(),
            WeightTable::cell_balanced(&c).unwrap(),
            group_instance_weights(&c, 0.9999).unwrap(),
        ] {
            assert!((table.dataset_mean(&c) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_cells_weigh_zero() {
        let c = counts(vec![vec![10, 0], vec![5, 5]]);
        let t = group_instance_weights(&c, 0.9999).unwrap();
        assert_eq!(t.weight(0, 1), 0.0);
        assert!((t.dataset_mean(&c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smoothed_weights_favor_small_cells() {
        let c = counts(vec![vec![10, 90], vec![810, 90]]);
        let t = group_instance_weights(&c, 0.9999).unwrap();
        assert!(t.weight(0, 0) > t.weight(0, 1));
        assert!(t.weight(1, 1) > t.weight(1, 0));
    }
}
