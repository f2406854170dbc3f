use ndarray::{Array2, ArrayView2};

use crate::dataspace::{ClassGroupCounts, LabeledGroupedDataset};
use crate::error::{Error, Result};
use crate::scalar::{softmax_into, Scalar};

use super::pointwise::{cross_entropy_grad, focal_loss_grad, ldam_loss_grad, mmd_penalty_grad};
use super::weights::{group_instance_weights, ldam_margins, MarginVector, WeightTable};
use super::{LossSpec, LossVariant};

/// A mini-batch of features with labels and, optionally, group ids.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a, S> {
    pub features: ArrayView2<'a, S>,
    pub labels: &'a [usize],
    pub groups: Option<&'a [usize]>,
}

impl<'a, S: Scalar> Batch<'a, S> {
    pub fn from_dataset(data: &'a LabeledGroupedDataset<S>) -> Self {
        Self {
            features: data.features().view(),
            labels: data.labels(),
            groups: Some(data.groups()),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Everything a variant needs from the training-set counts: margins and
/// instance weights.
#[derive(Debug, Clone)]
pub struct LossContext<S> {
    spec: LossSpec,
    margins: MarginVector<S>,
    weights: Option<Vec<Vec<S>>>,
}

impl<S: Scalar> LossContext<S> {
    pub fn new(spec: LossSpec, counts: &ClassGroupCounts) -> Result<Self> {
        spec.validate()?;
        let margins = if spec.variant.uses_margins() {
            ldam_margins(counts, spec.c)?
        } else {
            MarginVector {
                delta: vec![S::zero(); counts.num_classes()],
            }
        };
        let table = match spec.variant {
            LossVariant::Cw | LossVariant::LdamCw => Some(WeightTable::class_balanced(counts)?),
            LossVariant::Iw => Some(WeightTable::cell_balanced(counts)?),
            LossVariant::LdamIw => Some(group_instance_weights(counts, spec.beta)?),
            _ => None,
        };
        let weights = table.map(|t| {
            t.group_w
                .iter()
                .map(|row| row.iter().map(|&w| S::lit(w)).collect())
                .collect()
        });
        Ok(Self {
            spec,
            margins,
            weights,
        })
    }

    pub fn spec(&self) -> &LossSpec {
        &self.spec
    }

    pub fn margins(&self) -> &MarginVector<S> {
        &self.margins
    }

    pub fn num_classes(&self) -> usize {
        self.margins.delta.len()
    }

    fn instance_weight(&self, class: usize, group: Option<usize>) -> S {
        match (&self.weights, group) {
            (None, _) => S::one(),
            (Some(w), Some(g)) => w[class][g],
            // Class-only tables are constant across groups.
            (Some(w), None) => w[class][0],
        }
    }
}

/// Additive parts of a batch objective.
///
/// `total = main + rho * mmd - lambda_adv * adversary` is the objective seen
/// by the shared layers; the adversary head descends `adversary` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveBreakdown<S> {
    pub main: S,
    pub mmd: S,
    pub adversary: S,
    pub total: S,
}

/// Objective gradients with respect to the two heads' logits.
#[derive(Debug, Clone)]
pub struct ObjectiveGradients<S> {
    /// `d(main + rho * mmd) / d logits`.
    pub logits: Array2<S>,
    /// `d adversary / d adversary logits`, for the adversarial variant.
    pub adversary: Option<Array2<S>>,
}

pub fn composite_objective<S: Scalar>(
    ctx: &LossContext<S>,
    logits: ArrayView2<S>,
    adv_logits: Option<ArrayView2<S>>,
    labels: &[usize],
    groups: Option<&[usize]>,
) -> Result<ObjectiveBreakdown<S>> {
    composite_objective_with_grad(ctx, logits, adv_logits, labels, groups).map(|(b, _)| b)
}

pub fn composite_objective_with_grad<S: Scalar>(
    ctx: &LossContext<S>,
    logits: ArrayView2<S>,
    adv_logits: Option<ArrayView2<S>>,
    labels: &[usize],
    groups: Option<&[usize]>,
) -> Result<(ObjectiveBreakdown<S>, ObjectiveGradients<S>)> {
    let spec = ctx.spec;
    let variant = spec.variant;
    let (n, k) = logits.dim();
    if n == 0 {
        return Err(Error::Empty("batch"));
    }
    if labels.len() != n {
        return Err(Error::Dimension(format!("{n} logit rows, {} labels", labels.len())));
    }
    if k != ctx.num_classes() {
        return Err(Error::Dimension(format!(
            "{k} logit columns, loss built for {} classes",
            ctx.num_classes()
        )));
    }
    if let Some(g) = groups {
        if g.len() != n {
            return Err(Error::Dimension(format!("{n} logit rows, {} groups", g.len())));
        }
    }
    if variant.needs_groups() && groups.is_none() {
        return Err(Error::MissingGroups(variant.name()));
    }
    let adv_logits = if variant.needs_adversary() {
        Some(adv_logits.ok_or(Error::MissingAdversary(variant.name()))?)
    } else {
        None
    };

    let n_s = S::from_count(n);
    let gamma = S::lit(spec.gamma);
    let mut grad = Array2::zeros((n, k));
    let mut main = S::zero();
    let mut row_grad = vec![S::zero(); k];
    for (i, (z, mut g_row)) in logits.outer_iter().zip(grad.outer_iter_mut()).enumerate() {
        let z = z.to_vec();
        let y = labels[i];
        if y >= k {
            return Err(Error::InvalidArgument(format!("label {y} out of range for {k} classes")));
        }
        let loss = match variant {
            LossVariant::Focal => focal_loss_grad(&z, y, gamma, &mut row_grad),
            v if v.uses_margins() => ldam_loss_grad(&z, y, &ctx.margins, &mut row_grad),
            _ => cross_entropy_grad(&z, y, &mut row_grad),
        };
        let w = ctx.instance_weight(y, groups.map(|g| g[i]));
        main += w * loss;
        for (dst, &src) in g_row.iter_mut().zip(&row_grad) {
            *dst = w * src / n_s;
        }
    }
    main /= n_s;

    let mut mmd = S::zero();
    if variant == LossVariant::LdamReg {
        let groups = groups.expect("checked above");
        let mut probs = Array2::zeros((n, k));
        for (z, mut p) in logits.outer_iter().zip(probs.outer_iter_mut()) {
            softmax_into(&z.to_vec(), p.as_slice_mut().expect("row is contiguous"));
        }
        let (value, d_probs) = mmd_penalty_grad(probs.view(), groups);
        mmd = value;
        let rho = S::lit(spec.rho);
        // Back through the softmax: dz_j = p_j (a_j - sum_m a_m p_m).
        for ((p, a), mut g_row) in probs.outer_iter().zip(d_probs.outer_iter()).zip(grad.outer_iter_mut()) {
            let dot: S = p.iter().zip(a.iter()).map(|(&pm, &am)| pm * am).sum();
            for j in 0..k {
                g_row[j] += rho * p[j] * (a[j] - dot);
            }
        }
    }

    let mut adversary = S::zero();
    let mut adv_grad = None;
    if let Some(adv) = adv_logits {
        let groups = groups.expect("checked above");
        if adv.nrows() != n {
            return Err(Error::Dimension(format!(
                "{n} logit rows, {} adversary rows",
                adv.nrows()
            )));
        }
        let num_groups = adv.ncols();
        let mut d_adv = Array2::zeros((n, num_groups));
        let mut row = vec![S::zero(); num_groups];
        for ((a, mut d_row), &g) in adv.outer_iter().zip(d_adv.outer_iter_mut()).zip(groups) {
            if g >= num_groups {
                return Err(Error::InvalidArgument(format!(
                    "group {g} out of range for an adversary over {num_groups} groups"
                )));
            }
            adversary += cross_entropy_grad(&a.to_vec(), g, &mut row);
            for (dst, &src) in d_row.iter_mut().zip(&row) {
                *dst = src / n_s;
            }
        }
        adversary /= n_s;
        adv_grad = Some(d_adv);
    }

    let total = main + S::lit(spec.rho) * mmd - S::lit(spec.lambda_adv) * adversary;
    Ok((
        ObjectiveBreakdown {
            main,
            mmd,
            adversary,
            total,
        },
        ObjectiveGradients {
            logits: grad,
            adversary: adv_grad,
        },
    ))
}
