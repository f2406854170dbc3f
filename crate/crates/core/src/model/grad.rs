use ndarray::Axis;

use crate::error::Result;
use crate::losses::{composite_objective, composite_objective_with_grad, Batch, LossContext, ObjectiveBreakdown};
use crate::scalar::Scalar;

use super::{AdversaryHead, ModelParams};

/// Analytic gradients of the composite objective.
///
/// Head gradients are those of `main + rho * mmd`. The adversary head gets
/// the gradient of its own cross-entropy, which it descends. The shared
/// layer receives the head gradient minus `lambda_adv` times the adversary
/// gradient, i.e. the adversary's signal arrives reversed.
pub fn gradient<S: Scalar>(
    params: &ModelParams<S>,
    batch: &Batch<'_, S>,
    ctx: &LossContext<S>,
) -> Result<(ObjectiveBreakdown<S>, ModelParams<S>)> {
    let pass = params.forward(batch.features)?;
    let (breakdown, d) = composite_objective_with_grad(
        ctx,
        pass.logits.view(),
        pass.adv_logits.as_ref().map(|a| a.view()),
        batch.labels,
        batch.groups,
    )?;

    let mut d_hidden = d.logits.dot(&params.w2);
    let adversary = match (&params.adversary, &d.adversary) {
        (Some(head), Some(d_adv)) => {
            let lambda = S::lit(ctx.spec().lambda_adv);
            d_hidden.scaled_add(-lambda, &d_adv.dot(&head.w));
            Some(AdversaryHead {
                w: d_adv.t().dot(&pass.hidden),
                b: d_adv.sum_axis(Axis(0)),
            })
        }
        (Some(head), None) => Some(AdversaryHead {
            w: head.w.mapv(|_| S::zero()),
            b: head.b.mapv(|_| S::zero()),
        }),
        (None, _) => None,
    };
    // tanh' = 1 - tanh^2
    let d_pre = d_hidden * pass.hidden.mapv(|h| S::one() - h * h);

    let grads = ModelParams {
        w1: d_pre.t().dot(&batch.features),
        b1: d_pre.sum_axis(Axis(0)),
        w2: d.logits.t().dot(&pass.hidden),
        b2: d.logits.sum_axis(Axis(0)),
        adversary,
    };
    Ok((breakdown, grads))
}

/// Max relative error between [`gradient`] and central differences with step
/// `h`, over every parameter coordinate.
///
/// Shared and head coordinates are differenced on `main + rho * mmd -
/// lambda_adv * adversary`, adversary coordinates on the adversary
/// cross-entropy alone. Relative error uses the denominator
/// `max(|analytic|, |numeric|, 1e-8)`.
pub fn grad_check<S: Scalar>(
    params: &ModelParams<S>,
    batch: &Batch<'_, S>,
    ctx: &LossContext<S>,
    h: S,
) -> Result<f64> {
    assert!(h > S::zero(), "finite-difference step must be positive");
    let (_, analytic) = gradient(params, batch, ctx)?;
    let objective = |p: &ModelParams<S>| -> Result<ObjectiveBreakdown<S>> {
        let pass = p.forward(batch.features)?;
        composite_objective(
            ctx,
            pass.logits.view(),
            pass.adv_logits.as_ref().map(|a| a.view()),
            batch.labels,
            batch.groups,
        )
    };

    let mut probe = params.clone();
    let mut worst = 0.0_f64;
    let analytic_blocks = analytic.blocks();
    for (b, (block, grads)) in analytic_blocks.iter().enumerate() {
        for (i, &a) in grads.iter().enumerate() {
            let original = params.blocks()[b].1[i];
            let mut value_at = |v: S| -> Result<S> {
                probe.blocks_mut()[b].1[i] = v;
                let o = objective(&probe)?;
                Ok(if block.is_adversary() { o.adversary } else { o.total })
            };
            let plus = value_at(original + h)?;
            let minus = value_at(original - h)?;
            value_at(original)?;
            let numeric = ((plus - minus) / (h + h)).as_f64();
            let a = a.as_f64();
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    Ok(worst)
}
