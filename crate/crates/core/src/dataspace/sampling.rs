use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::scalar::Scalar;

use super::{cell_targets, largest_remainder, LabeledGroupedDataset, RatioSpec};

/// Subsamples `data` without replacement so its cell counts hit the
/// largest-remainder targets of `ratios`. Selected rows keep source order.
pub fn resample_to_ratios<S: Scalar>(
    data: &LabeledGroupedDataset<S>,
    ratios: &RatioSpec,
    seed: u64,
) -> Result<LabeledGroupedDataset<S>> {
    if data.num_classes() != 2 {
        return Err(Error::InvalidArgument(format!(
            "ratio resampling needs a binary task, dataset declares {} classes",
            data.num_classes()
        )));
    }
    if data.num_groups() != ratios.num_groups() {
        return Err(Error::Dimension(format!(
            "dataset has {} groups, ratios have {}",
            data.num_groups(),
            ratios.num_groups()
        )));
    }
    let targets = cell_targets(ratios)?;
    let mut cells = data.cell_indices();
    for (y, row) in targets.iter().enumerate() {
        for (g, &needed) in row.iter().enumerate() {
            let available = cells[y][g].len();
            if needed > available {
                return Err(Error::InsufficientCell {
                    class: y,
                    group: g,
                    needed,
                    available,
                });
            }
        }
    }

    let mut stream = Stream::new(seed);
    let mut chosen = Vec::with_capacity(ratios.target_size);
    for (y, row) in targets.iter().enumerate() {
        for (g, &needed) in row.iter().enumerate() {
            let pool = &mut cells[y][g];
            stream.shuffle(pool);
            chosen.extend_from_slice(&pool[..needed]);
        }
    }
    chosen.sort_unstable();
    Ok(data.subset(&chosen))
}

/// Stratified train/dev/test split.
///
/// Each nonempty `(class, group)` cell is shuffled and cut into parts whose
/// sizes are the largest-remainder rounding of `fractions × cell size`.
/// Parts keep source order.
pub fn split<S: Scalar>(
    data: &LabeledGroupedDataset<S>,
    fractions: [f64; 3],
    seed: u64,
) -> Result<[LabeledGroupedDataset<S>; 3]> {
    if fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "split fractions {fractions:?} must be nonnegative"
        )));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split fractions sum to {total}, expected 1"
        )));
    }
    let nonzero_parts = fractions.iter().filter(|&&f| f > 0.0).count();

    let mut stream = Stream::new(seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (y, row) in data.cell_indices().into_iter().enumerate() {
        for (g, mut cell) in row.into_iter().enumerate() {
            if cell.is_empty() {
                continue;
            }
            if cell.len() < nonzero_parts {
                return Err(Error::InvalidArgument(format!(
                    "cell (class {y}, group {g}) has {} instances, fewer than the {nonzero_parts} nonzero split parts",
                    cell.len()
                )));
            }
            stream.shuffle(&mut cell);
            let sizes = largest_remainder(cell.len(), &fractions);
            let mut start = 0;
            for (part, size) in parts.iter_mut().zip(sizes) {
                part.extend_from_slice(&cell[start..start + size]);
                start += size;
            }
        }
    }
    for part in parts.iter_mut() {
        part.sort_unstable();
    }
    Ok([
        data.subset(&parts[0]),
        data.subset(&parts[1]),
        data.subset(&parts[2]),
    ])
}
