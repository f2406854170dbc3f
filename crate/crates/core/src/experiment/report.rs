use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataspace::format_f64;
use crate::error::{Error, Result};
use crate::metrics::{pareto_frontier, select_model, SelectionPolicy, TradeoffPoint};

use super::ExperimentConfig;

pub const ROWS_HEADER: &str =
    "config_id,variant,C,rho,lambda,beta,gamma,setting,dev_f,dev_gap,test_f,test_gap";
pub const FRONTIER_HEADER: &str = "f,fairness,config_id";
pub const TABLE_HEADER: &str = "setting,method,config_id,test_f,test_one_minus_gap";

/// One sweep row. Metric fields are NaN when `error` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub config_id: usize,
    /// Loss variant name, or `INLP` for projected models.
    pub variant: String,
    pub c: f64,
    pub rho: f64,
    pub lambda: f64,
    pub beta: f64,
    pub gamma: f64,
    pub setting: String,
    pub dev_f: f64,
    pub dev_gap: f64,
    pub test_f: f64,
    pub test_gap: f64,
    pub error: Option<String>,
}

impl ResultRow {
    pub(crate) fn skeleton(config: &ExperimentConfig, config_id: usize) -> Self {
        Self {
            config_id,
            variant: config.method().to_string(),
            c: config.loss.c,
            rho: config.loss.rho,
            lambda: config.loss.lambda_adv,
            beta: config.loss.beta,
            gamma: config.loss.gamma,
            setting: config.setting.label().to_string(),
            dev_f: f64::NAN,
            dev_gap: f64::NAN,
            test_f: f64::NAN,
            test_gap: f64::NAN,
            error: None,
        }
    }

    pub fn failed(config: &ExperimentConfig, config_id: usize, message: String) -> Self {
        Self {
            error: Some(message),
            ..Self::skeleton(config, config_id)
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn dev_point(&self) -> TradeoffPoint {
        TradeoffPoint {
            f: self.dev_f,
            fairness: 1.0 - self.dev_gap,
            config_id: self.config_id,
        }
    }

    pub fn test_point(&self) -> TradeoffPoint {
        TradeoffPoint {
            f: self.test_f,
            fairness: 1.0 - self.test_gap,
            config_id: self.config_id,
        }
    }
}

fn check_field(name: &str, value: &str) -> Result<()> {
    if value.contains([',', '"', '\n', '\r']) {
        return Err(Error::InvalidArgument(format!(
            "{name} {value:?} cannot be written to CSV unquoted"
        )));
    }
    Ok(())
}

/// Failed rows keep their hyperparameters and leave the metric cells empty.
pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut out = format!("{ROWS_HEADER}\n");
    for r in rows {
        check_field("variant", &r.variant)?;
        check_field("setting", &r.setting)?;
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.config_id,
            r.variant,
            format_f64(r.c),
            format_f64(r.rho),
            format_f64(r.lambda),
            format_f64(r.beta),
            format_f64(r.gamma),
            r.setting
        );
        for v in [r.dev_f, r.dev_gap, r.test_f, r.test_gap] {
            out.push(',');
            if r.is_ok() {
                out.push_str(&format_f64(v));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_rows_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &rows_to_csv(rows)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_rows_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let err = |line: u64, message: String| Error::Csv {
        path: path.to_path_buf(),
        line: line as usize,
        message,
    };
    let csv_err = |e: csv::Error| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path, e.into()),
        _ => err(e.position().map_or(1, |p| p.line()), e.to_string()),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().collect::<Vec<_>>().join(",") != ROWS_HEADER {
        return Err(err(1, format!("header must be {ROWS_HEADER}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let cells = record.map_err(csv_err)?;
        let line_no = cells.position().map_or(0, |p| p.line());
        if cells.len() != 12 {
            return Err(err(line_no, format!("expected 12 fields, found {}", cells.len())));
        }
        let num = |j: usize| -> Result<f64> {
            cells[j]
                .parse::<f64>()
                .map_err(|_| err(line_no, format!("field {} is not a number: {:?}", j + 1, &cells[j])))
        };
        let failed = cells.iter().skip(8).all(str::is_empty);
        let metric = |j: usize| if failed { Ok(f64::NAN) } else { num(j) };
        rows.push(ResultRow {
            config_id: cells[0]
                .parse()
                .map_err(|_| err(line_no, format!("bad config_id {:?}", &cells[0])))?,
            variant: cells[1].to_string(),
            c: num(2)?,
            rho: num(3)?,
            lambda: num(4)?,
            beta: num(5)?,
            gamma: num(6)?,
            setting: cells[7].to_string(),
            dev_f: metric(8)?,
            dev_gap: metric(9)?,
            test_f: metric(10)?,
            test_gap: metric(11)?,
            error: failed.then(|| "failed".to_string()),
        });
    }
    Ok(rows)
}

/// Which split's metrics a frontier is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum EvalSplit {
    Dev,
    #[default]
    Test,
}

pub fn frontier_of(rows: &[ResultRow], on: EvalSplit) -> Result<Vec<TradeoffPoint>> {
    let points: Vec<TradeoffPoint> = rows
        .iter()
        .filter(|r| r.is_ok())
        .map(|r| match on {
            EvalSplit::Dev => r.dev_point(),
            EvalSplit::Test => r.test_point(),
        })
        .collect();
    if points.is_empty() {
        return Err(Error::Empty("no successful rows"));
    }
    Ok(pareto_frontier(&points))
}

pub fn frontier_to_csv(points: &[TradeoffPoint]) -> String {
    let mut out = format!("{FRONTIER_HEADER}\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", format_f64(p.f), format_f64(p.fairness), p.config_id);
    }
    out
}

/// Writes the Pareto-optimal rows as `f,fairness,config_id`.
pub fn emit_frontier(rows: &[ResultRow], path: impl AsRef<Path>, on: EvalSplit) -> Result<Vec<TradeoffPoint>> {
    let points = frontier_of(rows, on)?;
    write_text(path.as_ref(), &frontier_to_csv(&points))?;
    Ok(points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub setting: String,
    pub method: String,
    pub config_id: usize,
    pub test_f: f64,
    pub test_one_minus_gap: f64,
}

/// One entry per (setting, method), in first-appearance order, picked by
/// `policy` on dev metrics and reported on test.
pub fn table_of(rows: &[ResultRow], policy: SelectionPolicy) -> Result<Vec<TableEntry>> {
    let ok: Vec<&ResultRow> = rows.iter().filter(|r| r.is_ok()).collect();
    if ok.is_empty() {
        return Err(Error::Empty("no successful rows"));
    }
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in &ok {
        let key = (r.setting.as_str(), r.variant.as_str());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(setting, method)| {
            let group: Vec<&ResultRow> = ok
                .iter()
                .copied()
                .filter(|r| r.setting == setting && r.variant == method)
                .collect();
            let points: Vec<TradeoffPoint> = group.iter().map(|r| r.dev_point()).collect();
            let id = select_model(&points, policy)?;
            let chosen = group
                .iter()
                .find(|r| r.config_id == id)
                .expect("selected id comes from the group");
            Ok(TableEntry {
                setting: setting.to_string(),
                method: method.to_string(),
                config_id: id,
                test_f: chosen.test_f,
                test_one_minus_gap: 1.0 - chosen.test_gap,
            })
        })
        .collect()
}

pub fn table_to_csv(entries: &[TableEntry]) -> String {
    let mut out = format!("{TABLE_HEADER}\n");
    for e in entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.setting,
            e.method,
            e.config_id,
            format_f64(e.test_f),
            format_f64(e.test_one_minus_gap)
        );
    }
    out
}

pub fn emit_table(rows: &[ResultRow], path: impl AsRef<Path>, policy: SelectionPolicy) -> Result<Vec<TableEntry>> {
    let entries = table_of(rows, policy)?;
    write_text(path.as_ref(), &table_to_csv(&entries))?;
    Ok(entries)
}
