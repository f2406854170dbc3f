//! Performance and equalised-odds fairness metrics, Pareto frontiers, and
//! model-selection policies.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unweighted mean of per-class F1. A class with no true and no predicted
/// instances scores 0.
pub fn macro_f(preds: &[usize], labels: &[usize], num_classes: usize) -> Result<f64> {
    if preds.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} predictions, {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    if num_classes == 0 {
        return Err(Error::InvalidArgument("num_classes must be positive".into()));
    }
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fn_ = vec![0usize; num_classes];
    for (&p, &y) in preds.iter().zip(labels) {
        if p >= num_classes || y >= num_classes {
            return Err(Error::InvalidArgument(format!(
                "class id out of range for {num_classes} classes"
            )));
        }
        if p == y {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[y] += 1;
        }
    }
    let total: f64 = (0..num_classes)
        .map(|j| {
            let denom = 2 * tp[j] + fp[j] + fn_[j];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[j] as f64 / denom as f64
            }
        })
        .sum();
    Ok(total / num_classes as f64)
}

/// Per-group true positive and true negative rates for a binary task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub tpr: Vec<f64>,
    pub tnr: Vec<f64>,
    /// Set when some group had no positives or no negatives; those rates
    /// are reported as 1.
    pub undefined: bool,
}

pub fn group_rates(
    preds: &[usize],
    labels: &[usize],
    groups: &[usize],
    num_groups: usize,
) -> Result<GroupRates> {
    if preds.len() != labels.len() || labels.len() != groups.len() {
        return Err(Error::Dimension(format!(
            "{} predictions, {} labels, {} groups",
            preds.len(),
            labels.len(),
            groups.len()
        )));
    }
    // [group][truth][prediction]
    let mut cm = vec![[[0usize; 2]; 2]; num_groups];
    for ((&p, &y), &g) in preds.iter().zip(labels).zip(groups) {
        if p > 1 || y > 1 {
            return Err(Error::InvalidArgument(
                "group rates are defined for binary labels only".into(),
            ));
        }
        if g >= num_groups {
            return Err(Error::InvalidArgument(format!(
                "group {g} out of range for {num_groups} groups"
            )));
        }
        cm[g][y][p] += 1;
    }
    let mut undefined = false;
    let mut rate = |hit: usize, miss: usize| {
        if hit + miss == 0 {
            undefined = true;
            1.0
        } else {
            hit as f64 / (hit + miss) as f64
        }
    };
    let mut tpr = Vec::with_capacity(num_groups);
    let mut tnr = Vec::with_capacity(num_groups);
    for c in &cm {
        tpr.push(rate(c[1][1], c[1][0]));
        tnr.push(rate(c[0][0], c[0][1]));
    }
    Ok(GroupRates {
        tpr,
        tnr,
        undefined,
    })
}

/// Mean of the absolute TPR and TNR differences between the two groups.
pub fn gap(rates: &GroupRates) -> Result<f64> {
    if rates.tpr.len() != 2 || rates.tnr.len() != 2 {
        return Err(Error::Dimension(format!(
            "GAP is defined for two groups, got {}",
            rates.tpr.len()
        )));
    }
    Ok(((rates.tpr[0] - rates.tpr[1]).abs() + (rates.tnr[0] - rates.tnr[1]).abs()) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub macro_f: f64,
    pub tpr: Vec<f64>,
    pub tnr: Vec<f64>,
    pub gap: f64,
    pub one_minus_gap: f64,
    pub undefined_rates: bool,
}

impl EvalReport {
    /// Evaluates binary predictions over two groups.
    pub fn compute(preds: &[usize], labels: &[usize], groups: &[usize]) -> Result<Self> {
        let macro_f = macro_f(preds, labels, 2)?;
        let rates = group_rates(preds, labels, groups, 2)?;
        let gap = gap(&rates)?;
        Ok(Self {
            macro_f,
            tpr: rates.tpr,
            tnr: rates.tnr,
            gap,
            one_minus_gap: 1.0 - gap,
            undefined_rates: rates.undefined,
        })
    }

    pub fn point(&self, config_id: usize) -> TradeoffPoint {
        TradeoffPoint {
            f: self.macro_f,
            fairness: self.one_minus_gap,
            config_id,
        }
    }
}

/// One model's (performance, fairness) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub f: f64,
    pub fairness: f64,
    pub config_id: usize,
}

impl TradeoffPoint {
    /// At least as good on both axes and strictly better on one.
    pub fn dominates(&self, other: &TradeoffPoint) -> bool {
        self.f >= other.f
            && self.fairness >= other.fairness
            && (self.f > other.f || self.fairness > other.fairness)
    }
}

/// Points not dominated by any other, first occurrence kept for duplicate
/// coordinates, in input order.
pub fn pareto_frontier(points: &[TradeoffPoint]) -> Vec<TradeoffPoint> {
    let mut kept: Vec<TradeoffPoint> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let duplicate = points[..i]
            .iter()
            .any(|q| q.f == p.f && q.fairness == p.fairness);
        if duplicate {
            continue;
        }
        if points.iter().any(|q| q.dominates(p)) {
            continue;
        }
        kept.push(*p);
    }
    kept
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SelectionPolicy {
    BestDevF,
    FairestDev,
    HarmonicMean,
    FFloorThenMinGap { floor: f64 },
}

impl fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionPolicy::BestDevF => f.write_str("best-dev-f"),
            SelectionPolicy::FairestDev => f.write_str("fairest-dev"),
            SelectionPolicy::HarmonicMean => f.write_str("harmonic-mean"),
            SelectionPolicy::FFloorThenMinGap { floor } => write!(f, "f-floor:{floor}"),
        }
    }
}

impl FromStr for SelectionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        match s.as_str() {
            "best-dev-f" => Ok(SelectionPolicy::BestDevF),
            "fairest-dev" => Ok(SelectionPolicy::FairestDev),
            "harmonic-mean" => Ok(SelectionPolicy::HarmonicMean),
            _ => s
                .strip_prefix("f-floor:")
                .and_then(|v| v.parse().ok())
                .map(|floor| SelectionPolicy::FFloorThenMinGap { floor })
                .ok_or_else(|| Error::InvalidArgument(format!("unknown selection policy {s:?}"))),
        }
    }
}

pub fn harmonic_mean(f: f64, fairness: f64) -> f64 {
    if f + fairness == 0.0 {
        0.0
    } else {
        2.0 * f * fairness / (f + fairness)
    }
}

/// Picks a config id from dev-set points. Ties go to the smallest id.
pub fn select_model(candidates: &[TradeoffPoint], policy: SelectionPolicy) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::Empty("no candidates to select from"));
    }
    let score: Box<dyn Fn(&TradeoffPoint) -> f64> = match policy {
        SelectionPolicy::BestDevF => Box::new(|p| p.f),
        SelectionPolicy::FairestDev | SelectionPolicy::FFloorThenMinGap { .. } => {
            Box::new(|p| p.fairness)
        }
        SelectionPolicy::HarmonicMean => Box::new(|p| harmonic_mean(p.f, p.fairness)),
    };
    let eligible = candidates.iter().filter(|p| match policy {
        SelectionPolicy::FFloorThenMinGap { floor } => p.f >= floor,
        _ => true,
    });
    eligible
        .max_by(|a, b| {
            score(a)
                .total_cmp(&score(b))
                .then_with(|| b.config_id.cmp(&a.config_id))
        })
        .map(|p| p.config_id)
        .ok_or(match policy {
            SelectionPolicy::FFloorThenMinGap { floor } => Error::EmptyFloor(floor),
            _ => Error::Empty("no candidates to select from"),
        })
}

/// Median of a nonempty slice (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}
