use crate::error::{Error, Result};

use super::RatioSpec;

/// Largest-remainder (Hamilton) apportionment of `total` seats.
///
/// Quotas within 1e-9 of an integer are snapped to it so that products such
/// as `0.7 * 1000` do not lose a seat to representation error. Remaining
/// seats go to the largest fractional remainders, ties to the lower index.
pub fn largest_remainder(total: usize, fractions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = fractions
        .iter()
        .map(|&f| {
            let q = f * total as f64;
            let r = q.round();
            if (q - r).abs() <= 1e-9 * r.abs().max(1.0) {
                r
            } else {
                q
            }
        })
        .collect();
    let mut seats: Vec<usize> = quotas.iter().map(|q| q.floor().max(0.0) as usize).collect();
    let assigned: usize = seats.iter().sum();
    let remaining = total.saturating_sub(assigned);

    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(remaining) {
        seats[i] += 1;
    }
    seats
}

/// Cell targets `[class][group]` for a ratio spec.
///
/// Classes are apportioned first, then groups within each class, so both the
/// class totals and the within-class splits are individually exact roundings.
pub fn cell_targets(ratios: &RatioSpec) -> Result<Vec<Vec<usize>>> {
    ratios.validate()?;
    let class_fractions = ratios.class_fractions();
    let class_counts = largest_remainder(ratios.target_size, &class_fractions);
    let mut cells = Vec::with_capacity(2);
    for (y, &n_y) in class_counts.iter().enumerate() {
        let row = largest_remainder(n_y, &ratios.stereotype[y]);
        for (g, &count) in row.iter().enumerate() {
            let fraction = class_fractions[y] * ratios.stereotype[y][g];
            if count == 0 && fraction > 0.0 {
                return Err(Error::CellStarvation {
                    class: y,
                    group: g,
                    fraction,
                    target_size: ratios.target_size,
                });
            }
        }
        cells.push(row);
    }
    Ok(cells)
}
