//! Iterative nullspace projection.
//!
//! Repeatedly fit a linear classifier for the protected group on hidden
//! representations and remove the directions it uses, until the classifier
//! is no better than the majority baseline. The removed directions are kept
//! as an orthonormal basis `B`, so the composed projection is `I - BᵀB`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::predict_from_logits;
use crate::scalar::{softmax_into, Scalar};

/// Full-batch subgradient descent on the L2-regularized hinge loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub reg: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            learning_rate: 0.1,
            reg: 1e-3,
        }
    }
}

/// Linear group predictor. Two groups use a single row scoring the
/// higher-numbered group; more groups use one-vs-rest rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGroupClassifier<S> {
    pub w: Array2<S>,
    pub bias: Vec<S>,
    pub train_accuracy: f64,
    /// Group ids each row scores, in row order.
    pub classes: Vec<usize>,
}

impl<S: Scalar> LinearGroupClassifier<S> {
    pub fn predict(&self, reps: ArrayView2<S>) -> Vec<usize> {
        let mut scores = reps.dot(&self.w.t());
        for mut row in scores.outer_iter_mut() {
            for (v, &b) in row.iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        if self.w.nrows() == 1 {
            scores
                .column(0)
                .iter()
                .map(|&s| if s > S::zero() { self.classes[1] } else { self.classes[0] })
                .collect()
        } else {
            predict_from_logits(scores.view())
                .into_iter()
                .map(|j| self.classes[j])
                .collect()
        }
    }
}

fn fit_hinge_row<S: Scalar>(reps: ArrayView2<S>, targets: &[S], cfg: &SvmConfig) -> (Array1<S>, S) {
    let (n, h) = reps.dim();
    let n_s = S::from_count(n);
    let lr = S::lit(cfg.learning_rate);
    let reg = S::lit(cfg.reg);
    let mut w = Array1::<S>::zeros(h);
    let mut b = S::zero();
    let mut grad_w = Array1::<S>::zeros(h);
    for _ in 0..cfg.steps {
        grad_w.fill(S::zero());
        let mut grad_b = S::zero();
        let scores = reps.dot(&w);
        for ((x, &s), &t) in reps.outer_iter().zip(scores.iter()).zip(targets) {
            if t * (s + b) < S::one() {
                grad_w.scaled_add(-t / n_s, &x);
                grad_b -= t / n_s;
            }
        }
        grad_w.scaled_add(reg, &w);
        w.scaled_add(-lr, &grad_w);
        b -= lr * grad_b;
    }
    (w, b)
}

pub fn fit_linear_group_classifier<S: Scalar>(
    reps: ArrayView2<S>,
    groups: &[usize],
    cfg: &SvmConfig,
) -> Result<LinearGroupClassifier<S>> {
    if reps.nrows() != groups.len() {
        return Err(Error::Dimension(format!(
            "{} representations, {} groups",
            reps.nrows(),
            groups.len()
        )));
    }
    if reps.nrows() < 2 {
        return Err(Error::Empty("need at least two representations"));
    }
    let mut classes: Vec<usize> = groups.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleGroup);
    }
    let row_targets: Vec<Vec<S>> = if classes.len() == 2 {
        vec![groups
            .iter()
            .map(|&g| if g == classes[1] { S::one() } else { -S::one() })
            .collect()]
    } else {
        classes
            .iter()
            .map(|&c| groups.iter().map(|&g| if g == c { S::one() } else { -S::one() }).collect())
            .collect()
    };
    let mut w = Array2::zeros((row_targets.len(), reps.ncols()));
    let mut bias = Vec::with_capacity(row_targets.len());
    for (mut row, targets) in w.outer_iter_mut().zip(&row_targets) {
        let (wr, b) = fit_hinge_row(reps, targets, cfg);
        row.assign(&wr);
        bias.push(b);
    }
    let mut clf = LinearGroupClassifier {
        w,
        bias,
        train_accuracy: 0.0,
        classes,
    };
    let preds = clf.predict(reps);
    let correct = preds.iter().zip(groups).filter(|(p, g)| p == g).count();
    clf.train_accuracy = correct as f64 / groups.len() as f64;
    Ok(clf)
}

fn drop_tolerance<S: Scalar>() -> S {
    S::lit(1e-10).max(S::epsilon() * S::lit(100.0))
}

/// Appends the components of `rows` orthogonal to `basis` as new unit
/// vectors. Residuals below the drop tolerance (relative to the row norm)
/// are discarded. Returns the number of directions added.
fn extend_basis<S: Scalar>(basis: &mut Vec<Array1<S>>, rows: ArrayView2<S>) -> usize {
    let tol = drop_tolerance::<S>();
    let before = basis.len();
    for row in rows.outer_iter() {
        let norm0 = row.dot(&row).sqrt();
        if norm0 == S::zero() || !norm0.is_finite() {
            continue;
        }
        let mut v = row.to_owned();
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for q in basis.iter() {
                let c = q.dot(&v);
                v.scaled_add(-c, q);
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm > tol * norm0 {
            v.mapv_inplace(|x| x / norm);
            basis.push(v);
        }
    }
    basis.len() - before
}

fn projection_from_basis<S: Scalar>(dim: usize, basis: &[Array1<S>]) -> Array2<S> {
    let mut p = Array2::<S>::eye(dim);
    for q in basis {
        for i in 0..dim {
            for j in 0..dim {
                p[[i, j]] -= q[i] * q[j];
            }
        }
    }
    p
}

/// `I - Bᵀ(BBᵀ)⁻¹B` for the row space `B` of `w`, built from an orthonormal
/// Gram-Schmidt basis.
pub fn nullspace_projection<S: Scalar>(w: ArrayView2<S>) -> Result<Array2<S>> {
    let mut basis = Vec::new();
    if extend_basis(&mut basis, w) == 0 {
        return Err(Error::ZeroWeights);
    }
    Ok(projection_from_basis(w.ncols(), &basis))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InlpConfig {
    pub max_iters: usize,
    /// Stop once the group classifier is at most this accurate; defaults to
    /// the majority-group fraction plus 0.02.
    #[serde(default)]
    pub stop_accuracy: Option<f64>,
    #[serde(default)]
    pub svm: SvmConfig,
}

impl Default for InlpConfig {
    fn default() -> Self {
        Self {
            max_iters: 10,
            stop_accuracy: None,
            svm: SvmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionState<S> {
    pub projection: Array2<S>,
    /// Orthonormal removed directions, one per row.
    pub removed: Array2<S>,
    /// Directions-removing iterations performed.
    pub iterations: usize,
    /// Group-classifier training accuracy at every fit, in order.
    pub accuracies: Vec<f64>,
    /// Set when every direction was removed before the stop criterion held.
    pub rank_exhausted: bool,
}

impl<S: Scalar> ProjectionState<S> {
    pub fn identity(dim: usize) -> Self {
        Self {
            projection: Array2::eye(dim),
            removed: Array2::zeros((0, dim)),
            iterations: 0,
            accuracies: Vec::new(),
            rank_exhausted: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn rank(&self) -> usize {
        self.dim() - self.removed.nrows()
    }

    /// Projects each row: `x ↦ P x`.
    pub fn apply(&self, reps: ArrayView2<S>) -> Array2<S> {
        reps.dot(&self.projection.t())
    }

    pub fn to_record(&self) -> ProjectionRecord {
        ProjectionRecord {
            hidden_dim: self.dim(),
            removed_directions: self
                .removed
                .outer_iter()
                .map(|r| r.iter().map(|v| v.as_f64()).collect())
                .collect(),
            accuracies: self.accuracies.clone(),
            iterations: self.iterations,
            rank_exhausted: self.rank_exhausted,
        }
    }
}

pub fn majority_fraction(groups: &[usize]) -> f64 {
    if groups.is_empty() {
        return 0.0;
    }
    let max_group = groups.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max_group + 1];
    groups.iter().for_each(|&g| counts[g] += 1);
    *counts.iter().max().unwrap_or(&0) as f64 / groups.len() as f64
}

pub fn inlp_run<S: Scalar>(
    reps: ArrayView2<S>,
    groups: &[usize],
    cfg: &InlpConfig,
) -> Result<ProjectionState<S>> {
    if cfg.max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
    }
    let dim = reps.ncols();
    let stop = cfg
        .stop_accuracy
        .unwrap_or_else(|| majority_fraction(groups) + 0.02);
    let mut basis: Vec<Array1<S>> = Vec::new();
    let mut state = ProjectionState::identity(dim);
    for _ in 0..cfg.max_iters {
        let projected = state.apply(reps);
        let clf = fit_linear_group_classifier(projected.view(), groups, &cfg.svm)?;
        state.accuracies.push(clf.train_accuracy);
        if clf.train_accuracy <= stop {
            break;
        }
        if extend_basis(&mut basis, clf.w.view()) == 0 {
            break;
        }
        state.iterations += 1;
        state.projection = projection_from_basis(dim, &basis);
        if basis.len() >= dim {
            state.rank_exhausted = true;
            break;
        }
    }
    state.removed = Array2::from_shape_fn((basis.len(), dim), |(i, j)| basis[i][j]);
    Ok(state)
}

/// Serialized form of a [`ProjectionState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub hidden_dim: usize,
    pub removed_directions: Vec<Vec<f64>>,
    pub accuracies: Vec<f64>,
    pub iterations: usize,
    pub rank_exhausted: bool,
}

impl ProjectionRecord {
    pub fn to_state<S: Scalar>(&self) -> Result<ProjectionState<S>> {
        let dim = self.hidden_dim;
        if self.removed_directions.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("removed direction length != hidden_dim".into()));
        }
        let basis: Vec<Array1<S>> = self
            .removed_directions
            .iter()
            .map(|r| r.iter().map(|&v| S::lit(v)).collect())
            .collect();
        Ok(ProjectionState {
            projection: projection_from_basis(dim, &basis),
            removed: Array2::from_shape_fn((basis.len(), dim), |(i, j)| basis[i][j]),
            iterations: self.iterations,
            accuracies: self.accuracies.clone(),
            rank_exhausted: self.rank_exhausted,
        })
    }
}

/// Multinomial logistic head on (projected) representations.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskHead<S> {
    pub w: Array2<S>,
    pub b: Array1<S>,
}

impl<S: Scalar> TaskHead<S> {
    pub fn logits(&self, reps: ArrayView2<S>) -> Array2<S> {
        crate::model::affine(reps, &self.w, &self.b)
    }

    pub fn predict(&self, reps: ArrayView2<S>) -> Vec<usize> {
        predict_from_logits(self.logits(reps).view())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub steps: usize,
    pub learning_rate: f64,
}

impl Default for HeadConfig {
    fn default() -> Self {
        Self {
            steps: 300,
            learning_rate: 0.5,
        }
    }
}

/// Projects `reps` by the state's projection and fits a fresh task head on
/// them by full-batch gradient descent on mean cross-entropy, from zeros.
pub fn apply_and_retrain<S: Scalar>(
    state: &ProjectionState<S>,
    reps: ArrayView2<S>,
    labels: &[usize],
    num_classes: usize,
    cfg: &HeadConfig,
) -> Result<TaskHead<S>> {
    if reps.ncols() != state.dim() {
        return Err(Error::Dimension(format!(
            "representations have {} columns, projection is {}x{}",
            reps.ncols(),
            state.dim(),
            state.dim()
        )));
    }
    if reps.nrows() != labels.len() {
        return Err(Error::Dimension("one label per representation".into()));
    }
    if reps.nrows() == 0 {
        return Err(Error::Empty("representations"));
    }
    let x = state.apply(reps);
    let n_s = S::from_count(x.nrows());
    let lr = S::lit(cfg.learning_rate);
    let mut head = TaskHead {
        w: Array2::zeros((num_classes, state.dim())),
        b: Array1::zeros(num_classes),
    };
    let mut d_logits = Array2::<S>::zeros((x.nrows(), num_classes));
    for _ in 0..cfg.steps {
        let logits = head.logits(x.view());
        for ((z, mut d), &y) in logits.outer_iter().zip(d_logits.outer_iter_mut()).zip(labels) {
            let out = d.as_slice_mut().expect("row is contiguous");
            softmax_into(z.as_slice().expect("row is contiguous"), out);
            out[y] -= S::one();
            out.iter_mut().for_each(|v| *v /= n_s);
        }
        head.w.scaled_add(-lr, &d_logits.t().dot(&x));
        head.b.scaled_add(-lr, &d_logits.sum_axis(Axis(0)));
    }
    Ok(head)
}
