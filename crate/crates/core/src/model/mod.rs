//! Single-hidden-layer classifier with an optional group adversary head.
//!
//! `hidden = tanh(x W1ᵀ + b1)`, `logits = hidden W2ᵀ + b2` and, when the
//! adversary is present, `adv_logits = hidden Waᵀ + ba`.

mod checkpoint;
mod grad;
mod train;

pub use checkpoint::{Checkpoint, DebiasHead};
pub use grad::{grad_check, gradient};
pub use train::{train, TrainConfig, TrainHistory};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryHead<S> {
    pub w: Array2<S>,
    pub b: Array1<S>,
}

/// Network parameters. Gradients use the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    pub w1: Array2<S>,
    pub b1: Array1<S>,
    pub w2: Array2<S>,
    pub b2: Array1<S>,
    pub adversary: Option<AdversaryHead<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamBlock {
    HiddenWeight,
    HiddenBias,
    HeadWeight,
    HeadBias,
    AdversaryWeight,
    AdversaryBias,
}

impl ParamBlock {
    pub fn is_adversary(self) -> bool {
        matches!(self, ParamBlock::AdversaryWeight | ParamBlock::AdversaryBias)
    }
}

/// Activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass<S> {
    pub hidden: Array2<S>,
    pub logits: Array2<S>,
    pub adv_logits: Option<Array2<S>>,
}

impl<S: Scalar> ModelParams<S> {
    pub fn zeros(
        input_dim: usize,
        hidden_dim: usize,
        num_classes: usize,
        num_groups: Option<usize>,
    ) -> Self {
        Self {
            w1: Array2::zeros((hidden_dim, input_dim)),
            b1: Array1::zeros(hidden_dim),
            w2: Array2::zeros((num_classes, hidden_dim)),
            b2: Array1::zeros(num_classes),
            adversary: num_groups.map(|g| AdversaryHead {
                w: Array2::zeros((g, hidden_dim)),
                b: Array1::zeros(g),
            }),
        }
    }

    /// Weights uniform in `[-s, s)` with `s = init_scale` or `1/sqrt(fan_in)`
    /// per layer; biases zero.
    pub fn init(
        input_dim: usize,
        hidden_dim: usize,
        num_classes: usize,
        num_groups: Option<usize>,
        init_scale: Option<f64>,
        stream: &mut Stream,
    ) -> Self {
        let mut params = Self::zeros(input_dim, hidden_dim, num_classes, num_groups);
        let s1 = init_scale.unwrap_or(1.0 / (input_dim as f64).sqrt());
        let s2 = init_scale.unwrap_or(1.0 / (hidden_dim as f64).sqrt());
        params.w1.mapv_inplace(|_| S::lit(stream.symmetric(s1)));
        params.w2.mapv_inplace(|_| S::lit(stream.symmetric(s2)));
        if let Some(adv) = params.adversary.as_mut() {
            adv.w.mapv_inplace(|_| S::lit(stream.symmetric(s2)));
        }
        params
    }

    pub fn zeros_like(&self) -> Self {
        let (d, h, k, g) = self.dims();
        Self::zeros(d, h, k, g)
    }

    /// `(input_dim, hidden_dim, num_classes, num_groups)`.
    pub fn dims(&self) -> (usize, usize, usize, Option<usize>) {
        (
            self.w1.ncols(),
            self.w1.nrows(),
            self.w2.nrows(),
            self.adversary.as_ref().map(|a| a.w.nrows()),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let (d, h, k, _) = self.dims();
        let mut ok = self.b1.len() == h && self.w2.ncols() == h && self.b2.len() == k && d > 0;
        if let Some(adv) = &self.adversary {
            ok &= adv.w.ncols() == h && adv.b.len() == adv.w.nrows();
        }
        if !ok {
            return Err(Error::Dimension("inconsistent parameter shapes".into()));
        }
        if self.blocks().iter().any(|(_, v)| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn blocks(&self) -> Vec<(ParamBlock, &[S])> {
        let mut out = vec![
            (ParamBlock::HiddenWeight, self.w1.as_slice().expect("standard layout")),
            (ParamBlock::HiddenBias, self.b1.as_slice().expect("standard layout")),
            (ParamBlock::HeadWeight, self.w2.as_slice().expect("standard layout")),
            (ParamBlock::HeadBias, self.b2.as_slice().expect("standard layout")),
        ];
        if let Some(adv) = &self.adversary {
            out.push((ParamBlock::AdversaryWeight, adv.w.as_slice().expect("standard layout")));
            out.push((ParamBlock::AdversaryBias, adv.b.as_slice().expect("standard layout")));
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<(ParamBlock, &mut [S])> {
        let mut out = vec![
            (ParamBlock::HiddenWeight, self.w1.as_slice_mut().expect("standard layout")),
            (ParamBlock::HiddenBias, self.b1.as_slice_mut().expect("standard layout")),
            (ParamBlock::HeadWeight, self.w2.as_slice_mut().expect("standard layout")),
            (ParamBlock::HeadBias, self.b2.as_slice_mut().expect("standard layout")),
        ];
        if let Some(adv) = self.adversary.as_mut() {
            out.push((ParamBlock::AdversaryWeight, adv.w.as_slice_mut().expect("standard layout")));
            out.push((ParamBlock::AdversaryBias, adv.b.as_slice_mut().expect("standard layout")));
        }
        out
    }

    pub fn hidden(&self, x: ArrayView2<S>) -> Result<Array2<S>> {
        let (d, ..) = self.dims();
        if x.ncols() != d {
            return Err(Error::Dimension(format!(
                "input has {} features, model expects {d}",
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite input".into()));
        }
        let mut pre = x.dot(&self.w1.t());
        pre += &self.b1;
        pre.mapv_inplace(|v| v.tanh());
        Ok(pre)
    }

    pub fn forward(&self, x: ArrayView2<S>) -> Result<ForwardPass<S>> {
        let hidden = self.hidden(x)?;
        let logits = affine(hidden.view(), &self.w2, &self.b2);
        let adv_logits = self
            .adversary
            .as_ref()
            .map(|adv| affine(hidden.view(), &adv.w, &adv.b));
        Ok(ForwardPass {
            hidden,
            logits,
            adv_logits,
        })
    }

    pub fn predict(&self, x: ArrayView2<S>) -> Result<Vec<usize>> {
        Ok(predict_from_logits(self.forward(x)?.logits.view()))
    }
}

pub(crate) fn affine<S: Scalar>(x: ArrayView2<S>, w: &Array2<S>, b: &Array1<S>) -> Array2<S> {
    let mut out = x.dot(&w.t());
    out += b;
    out
}

/// Index of the largest entry, ties to the smallest index.
pub fn argmax<S: Scalar>(row: ArrayView1<S>) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

pub fn predict_from_logits<S: Scalar>(logits: ArrayView2<S>) -> Vec<usize> {
    logits.axis_iter(Axis(0)).map(argmax).collect()
}
