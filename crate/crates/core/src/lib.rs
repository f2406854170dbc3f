//! Margin-based class-imbalance losses with group-fairness extensions.
//!
//! The crate trains a one-hidden-layer MLP on grouped, labeled features with
//! cross-entropy, focal, reweighted and label-distribution-aware margin
//! objectives, optionally with an adversarial group head (gradient reversal)
//! or a group mean-discrepancy penalty. It also implements nullspace
//! projection debiasing, equalized-odds metrics, Pareto frontiers and the
//! sweep harness behind the `fairmargin` binary.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod cli;
pub mod dataspace;
pub mod error;
pub mod experiment;
pub mod inlp;
pub mod json;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use losses::{LossSpec, LossVariant};
pub use metrics::{EvalReport, SelectionPolicy, TradeoffPoint};
pub use scalar::Scalar;

pub type Dataset = dataspace::LabeledGroupedDataset<f64>;
pub type Params = model::ModelParams<f64>;
pub type Projection = inlp::ProjectionState<f64>;
pub type Head = inlp::TaskHead<f64>;
