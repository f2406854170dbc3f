use ndarray::{Array2, ArrayView2};

use crate::scalar::{log_sum_exp, softmax_into, Scalar};

use super::MarginVector;

pub fn cross_entropy<S: Scalar>(z: &[S], y: usize) -> S {
    log_sum_exp(z.iter().copied()) - z[y]
}

/// Gradient of [`cross_entropy`] with respect to the logits; returns the loss.
pub fn cross_entropy_grad<S: Scalar>(z: &[S], y: usize, grad: &mut [S]) -> S {
    softmax_into(z, grad);
    grad[y] -= S::one();
    cross_entropy(z, y)
}

/// Margin loss: cross-entropy after subtracting the class margin from the
/// true-class logit.
pub fn ldam_loss<S: Scalar>(z: &[S], y: usize, margins: &MarginVector<S>) -> S {
    let shifted = z
        .iter()
        .enumerate()
        .map(|(j, &v)| if j == y { v - margins.delta[y] } else { v });
    log_sum_exp(shifted) - (z[y] - margins.delta[y])
}

pub fn ldam_loss_grad<S: Scalar>(z: &[S], y: usize, margins: &MarginVector<S>, grad: &mut [S]) -> S {
    let mut shifted = z.to_vec();
    shifted[y] -= margins.delta[y];
    cross_entropy_grad(&shifted, y, grad)
}

/// `-(1 - p_y)^gamma * ln p_y` with `p = softmax(z)`.
pub fn focal_loss<S: Scalar>(z: &[S], y: usize, gamma: S) -> S {
    let mut p = vec![S::zero(); z.len()];
    focal_loss_grad(z, y, gamma, &mut p)
}

pub fn focal_loss_grad<S: Scalar>(z: &[S], y: usize, gamma: S, grad: &mut [S]) -> S {
    let log_p = z[y] - log_sum_exp(z.iter().copied());
    softmax_into(z, grad);
    let p_y = grad[y];
    // 1 - p_y summed from the other classes keeps precision when p_y ~ 1.
    let rest: S = grad
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != y)
        .map(|(_, &p)| p)
        .sum();
    let modulator = rest.powf(gamma);
    let loss = -modulator * log_p;

    if rest == S::zero() {
        grad.iter_mut().for_each(|g| *g = S::zero());
        return loss;
    }
    let slope = if gamma == S::zero() {
        S::zero()
    } else {
        gamma * rest.powf(gamma - S::one()) * p_y * log_p
    };
    let factor = slope - modulator;
    for (j, g) in grad.iter_mut().enumerate() {
        let indicator = if j == y { S::one() } else { S::zero() };
        *g = (indicator - *g) * factor;
    }
    loss
}

/// Overall mean output and, per group id, `(count, mean output)` when the
/// group occurs in the batch.
#[allow(clippy::type_complexity)]
fn group_means<S: Scalar>(
    outputs: ArrayView2<S>,
    groups: &[usize],
) -> (Vec<S>, Vec<Option<(usize, Vec<S>)>>) {
    let (n, k) = outputs.dim();
    let num_groups = groups.iter().copied().max().map_or(0, |g| g + 1);
    let mut sums = vec![vec![S::zero(); k]; num_groups];
    let mut counts = vec![0usize; num_groups];
    let mut total = vec![S::zero(); k];
    for (row, &g) in outputs.outer_iter().zip(groups) {
        counts[g] += 1;
        for j in 0..k {
            sums[g][j] += row[j];
            total[j] += row[j];
        }
    }
    let n_s = S::from_count(n);
    let global = total.into_iter().map(|t| t / n_s).collect();
    let per_group = sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| {
            (c > 0).then(|| {
                let c_s = S::from_count(c);
                (c, s.into_iter().map(|v| v / c_s).collect())
            })
        })
        .collect();
    (global, per_group)
}

/// Sum over present groups of the squared distance between the group-mean
/// output and the overall mean output.
pub fn mmd_penalty<S: Scalar>(outputs: ArrayView2<S>, groups: &[usize]) -> S {
    mmd_penalty_grad(outputs, groups).0
}

/// Penalty value and its gradient with respect to each output row.
pub fn mmd_penalty_grad<S: Scalar>(outputs: ArrayView2<S>, groups: &[usize]) -> (S, Array2<S>) {
    assert_eq!(outputs.nrows(), groups.len(), "one group per output row");
    let (n, k) = outputs.dim();
    let mut grad = Array2::zeros((n, k));
    if n == 0 {
        return (S::zero(), grad);
    }
    let (global, per_group) = group_means(outputs, groups);
    let two = S::lit(2.0);
    let n_s = S::from_count(n);
    let mut value = S::zero();
    // Unweighted sum over groups of (group mean - overall mean).
    let mut drift = vec![S::zero(); k];
    for (_, mean) in per_group.iter().flatten() {
        for j in 0..k {
            let d = mean[j] - global[j];
            value += d * d;
            drift[j] += d;
        }
    }
    for (mut row, &g) in grad.outer_iter_mut().zip(groups) {
        let (count, mean) = per_group[g].as_ref().expect("group of a row is present");
        let c_s = S::from_count(*count);
        for j in 0..k {
            row[j] = two * (mean[j] - global[j]) / c_s - two * drift[j] / n_s;
        }
    }
    (value, grad)
}
