//! Model checkpoint file.
//!
//! ```json
//! {"format":"fairmargin-mlp/1","input_dim":d,"hidden_dim":h,"num_classes":K,
//!  "num_groups":G|null,"w1":[h*d],"b1":[h],"w2":[K*h],"b2":[K],
//!  "adv_w":[G*h]|null,"adv_b":[G]|null,"debias":null|{...}}
//! ```
//!
//! Matrices are row-major. `debias` holds a nullspace projection and the task
//! head retrained on projected representations.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inlp::{ProjectionRecord, TaskHead};
use crate::json::{read_json, write_json};
use crate::scalar::Scalar;

use super::{AdversaryHead, ModelParams};

pub const CHECKPOINT_FORMAT: &str = "fairmargin-mlp/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasHead {
    pub projection: ProjectionRecord,
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub num_groups: Option<usize>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub adv_w: Option<Vec<f64>>,
    pub adv_b: Option<Vec<f64>>,
    #[serde(default)]
    pub debias: Option<DebiasHead>,
}

fn flat<S: Scalar>(values: impl IntoIterator<Item = S>) -> Vec<f64> {
    values.into_iter().map(Scalar::as_f64).collect()
}

fn matrix<S: Scalar>(name: &str, rows: usize, cols: usize, v: &[f64]) -> Result<Array2<S>> {
    Array2::from_shape_vec((rows, cols), v.iter().map(|&x| S::lit(x)).collect())
        .map_err(|_| Error::Dimension(format!("{name}: expected {rows}x{cols} values, got {}", v.len())))
}

fn vector<S: Scalar>(name: &str, len: usize, v: &[f64]) -> Result<Array1<S>> {
    if v.len() != len {
        return Err(Error::Dimension(format!("{name}: expected {len} values, got {}", v.len())));
    }
    Ok(v.iter().map(|&x| S::lit(x)).collect())
}

impl Checkpoint {
    pub fn from_params<S: Scalar>(params: &ModelParams<S>) -> Self {
        let (d, h, k, g) = params.dims();
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            input_dim: d,
            hidden_dim: h,
            num_classes: k,
            num_groups: g,
            w1: flat(params.w1.iter().copied()),
            b1: flat(params.b1.iter().copied()),
            w2: flat(params.w2.iter().copied()),
            b2: flat(params.b2.iter().copied()),
            adv_w: params.adversary.as_ref().map(|a| flat(a.w.iter().copied())),
            adv_b: params.adversary.as_ref().map(|a| flat(a.b.iter().copied())),
            debias: None,
        }
    }

    pub fn with_debias<S: Scalar>(mut self, projection: ProjectionRecord, head: &TaskHead<S>) -> Self {
        self.debias = Some(DebiasHead {
            projection,
            head_w: flat(head.w.iter().copied()),
            head_b: flat(head.b.iter().copied()),
        });
        self
    }

    pub fn to_params<S: Scalar>(&self) -> Result<ModelParams<S>> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::InvalidArgument(format!(
                "unsupported checkpoint format {:?}",
                self.format
            )));
        }
        let (d, h, k) = (self.input_dim, self.hidden_dim, self.num_classes);
        let adversary = match (self.num_groups, &self.adv_w, &self.adv_b) {
            (Some(g), Some(w), Some(b)) => Some(AdversaryHead {
                w: matrix("adv_w", g, h, w)?,
                b: vector("adv_b", g, b)?,
            }),
            (None, None, None) => None,
            _ => {
                return Err(Error::Dimension(
                    "num_groups, adv_w and adv_b must be all set or all null".into(),
                ))
            }
        };
        let params = ModelParams {
            w1: matrix("w1", h, d, &self.w1)?,
            b1: vector("b1", h, &self.b1)?,
            w2: matrix("w2", k, h, &self.w2)?,
            b2: vector("b2", k, &self.b2)?,
            adversary,
        };
        params.validate()?;
        Ok(params)
    }

    /// Task head retrained after projection, if present.
    pub fn debias_head<S: Scalar>(&self) -> Result<Option<(Array2<S>, TaskHead<S>)>> {
        let Some(debias) = &self.debias else {
            return Ok(None);
        };
        let projection = debias.projection.to_state::<S>()?.projection;
        if projection.nrows() != self.hidden_dim {
            return Err(Error::Dimension("projection does not match hidden_dim".into()));
        }
        let head = TaskHead {
            w: matrix("head_w", self.num_classes, self.hidden_dim, &debias.head_w)?,
            b: vector("head_b", self.num_classes, &debias.head_b)?,
        };
        Ok(Some((projection, head)))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(self, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path)
    }
}
