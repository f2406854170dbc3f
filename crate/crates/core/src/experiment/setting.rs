use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataspace::RatioSpec;
use crate::error::{Error, Result};

/// Named class-balance / stereotyping preset, or an explicit composition.
///
/// Presets (class 1 positive, groups listed as `(g0, g1)`):
/// - `original`: 70% positive, every class split 18:82 across groups
/// - `90-90` / `95-95`: 90% (95%) positive, positives `(r, 1-r)`,
///   negatives `(1-r, r)`
/// - `table1(r)`: balanced classes, positives `(r, 1-r)`, negatives `(1-r, r)`
/// - `table2(p)`: positive fraction `p`, positives `(0.8, 0.2)`, negatives
///   `(0.2, 0.8)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting {
    Named(String),
    Custom {
        label: String,
        positive_fraction: f64,
        /// Row 0 is the negative class.
        stereotype: Vec<Vec<f64>>,
    },
}

fn stereotyped(positive_fraction: f64, r: f64) -> (f64, Vec<Vec<f64>>) {
    (positive_fraction, vec![vec![1.0 - r, r], vec![r, 1.0 - r]])
}

fn parse_arg(name: &str, prefix: &str) -> Option<Result<f64>> {
    let inner = name.strip_prefix(prefix)?.strip_suffix(')')?;
    Some(
        inner
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| *v > 0.0 && *v < 1.0)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("setting {name:?}: argument must lie in (0, 1)"))
            }),
    )
}

impl Setting {
    pub fn named(name: impl Into<String>) -> Self {
        Setting::Named(name.into())
    }

    pub fn table1(r: f64) -> Self {
        Setting::Named(format!("table1({r})"))
    }

    pub fn table2(p: f64) -> Self {
        Setting::Named(format!("table2({p})"))
    }

    pub fn label(&self) -> &str {
        match self {
            Setting::Named(name) => name,
            Setting::Custom { label, .. } => label,
        }
    }

    pub fn ratios(&self, target_size: usize) -> Result<RatioSpec> {
        let (positive_fraction, stereotype) = match self {
            Setting::Custom {
                positive_fraction,
                stereotype,
                ..
            } => (*positive_fraction, stereotype.clone()),
            Setting::Named(name) => match name.trim() {
                "original" => (0.7, vec![vec![0.18, 0.82], vec![0.18, 0.82]]),
                "90-90" => stereotyped(0.9, 0.9),
                "95-95" => stereotyped(0.95, 0.95),
                other => {
                    if let Some(r) = parse_arg(other, "table1(") {
                        stereotyped(0.5, r?)
                    } else if let Some(p) = parse_arg(other, "table2(") {
                        stereotyped(p?, 0.8)
                    } else {
                        return Err(Error::InvalidArgument(format!("unknown setting {other:?}")));
                    }
                }
            },
        };
        let spec = RatioSpec {
            positive_fraction,
            stereotype,
            target_size,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let setting = Setting::Named(s.trim().to_string());
        setting.ratios(100)?;
        Ok(setting)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let r = Setting::named("original").ratios(1000).unwrap();
        assert_eq!(r.positive_fraction, 0.7);
        assert_eq!(r.stereotype, vec![vec![0.18, 0.82], vec![0.18, 0.82]]);

        let r = Setting::named("95-95").ratios(1000).unwrap();
        assert_eq!(r.positive_fraction, 0.95);
        assert_eq!(r.stereotype[1], vec![0.95, 0.050000000000000044]);
        assert_eq!(r.stereotype[0][1], 0.95);

        let r = Setting::table1(0.8).ratios(10).unwrap();
        assert_eq!(r.positive_fraction, 0.5);
        assert_eq!(r.stereotype[1][0], 0.8);
        assert_eq!(r.stereotype[0][1], 0.8);

        let r = Setting::table2(0.7).ratios(10).unwrap();
        assert_eq!(r.positive_fraction, 0.7);
        assert_eq!(r.stereotype[1][0], 0.8);
    }

    #[test]
    fn bad_names() {
        assert!("table1(1.5)".parse::<Setting>().is_err());
        assert!("table3(0.5)".parse::<Setting>().is_err());
        assert!("table1(0.6)".parse::<Setting>().is_ok());
    }

    #[test]
    fn serde_forms() {
        let s: Setting = serde_json::from_str("\"90-90\"").unwrap();
        assert_eq!(s, Setting::named("90-90"));
        let c: Setting = serde_json::from_str(
            r#"{"label":"mine","positive_fraction":0.6,"stereotype":[[0.5,0.5],[0.3,0.7]]}"#,
        )
        .unwrap();
        assert_eq!(c.label(), "mine");
        assert_eq!(c.ratios(10).unwrap().stereotype[1], vec![0.3, 0.7]);
    }
}
