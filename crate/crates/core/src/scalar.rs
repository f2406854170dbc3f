//! Scalar abstraction shared by the numeric modules.
//!
//! Model, loss and projection code is written once against [`Scalar`] and
//! instantiated for `f32` or `f64`. The experiment pipeline and the
//! finite-difference checks run in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal or computed constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable in every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Stable `log(sum(exp(z)))` with max subtraction.
pub fn log_sum_exp<S: Scalar>(z: impl IntoIterator<Item = S> + Clone) -> S {
    let max = z
        .clone()
        .into_iter()
        .fold(S::neg_infinity(), |m, v| if v > m { v } else { m });
    if !max.is_finite() {
        return max;
    }
    let sum: S = z.into_iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Softmax of a row, written into `out`.
pub fn softmax_into<S: Scalar>(z: &[S], out: &mut [S]) {
    debug_assert_eq!(z.len(), out.len());
    let max = z.iter().fold(S::neg_infinity(), |m, &v| if v > m { v } else { m });
    let mut total = S::zero();
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

pub fn softmax<S: Scalar>(z: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); z.len()];
    softmax_into(z, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_large_logits() {
        let v = log_sum_exp([1000.0_f64, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let v32 = log_sum_exp([80.0_f32, 80.0]);
        assert!((v32 - (80.0 + 2f32.ln())).abs() < 1e-4);
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[0.3_f64, -1.2, 4.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
