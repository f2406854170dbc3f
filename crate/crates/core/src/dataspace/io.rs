//! CSV dataset format: header `y,g,f0,...,f{d-1}`, one instance per line,
//! integer labels and groups, features as decimals with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::LabeledGroupedDataset;

/// Formats a float with 17 significant digits, enough for an exact `f64`
/// round trip.
pub(crate) fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn save_csv<S: Scalar>(data: &LabeledGroupedDataset<S>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv_string(data)).map_err(|e| Error::io(path, e))
}

fn to_csv_string<S: Scalar>(data: &LabeledGroupedDataset<S>) -> String {
    let mut out = String::from("y,g");
    for j in 0..data.dim() {
        let _ = write!(out, ",f{j}");
    }
    out.push('\n');
    for (i, row) in data.features().outer_iter().enumerate() {
        let _ = write!(out, "{},{}", data.labels()[i], data.groups()[i]);
        for v in row {
            out.push(',');
            out.push_str(&format_f64(v.as_f64()));
        }
        out.push('\n');
    }
    out
}

pub fn load_csv<S: Scalar>(
    path: impl AsRef<Path>,
    num_classes: usize,
    num_groups: usize,
) -> Result<LabeledGroupedDataset<S>> {
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
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.len() < 3 || &header[0] != "y" || &header[1] != "g" {
        return Err(err(1, "header must start with y,g and name at least one feature".into()));
    }
    let dim = header.len() - 2;
    for (j, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{j}") {
            return Err(err(1, format!("expected column f{j}, found {name:?}")));
        }
    }

    let mut labels = Vec::new();
    let mut groups = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line_no = record.position().map_or(0, |p| p.line());
        if record.len() != dim + 2 {
            return Err(err(
                line_no,
                format!("expected {} fields, found {}", dim + 2, record.len()),
            ));
        }
        let y: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| err(line_no, format!("bad label {:?}", &record[0])))?;
        let g: usize = record[1]
            .trim()
            .parse()
            .map_err(|_| err(line_no, format!("bad group {:?}", &record[1])))?;
        if y >= num_classes {
            return Err(err(
                line_no,
                format!("label {y} out of range for {num_classes} classes"),
            ));
        }
        if g >= num_groups {
            return Err(err(
                line_no,
                format!("group {g} out of range for {num_groups} groups"),
            ));
        }
        for field in record.iter().skip(2) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("bad feature value {field:?}")))?;
            if !v.is_finite() {
                return Err(err(line_no, format!("non-finite feature value {field:?}")));
            }
            values.push(S::lit(v));
        }
        labels.push(y);
        groups.push(g);
    }
    if labels.is_empty() {
        return Err(err(2, "no data rows".into()));
    }
    let features = Array2::from_shape_vec((labels.len(), dim), values)
        .map_err(|e| Error::Dimension(e.to_string()))?;
    LabeledGroupedDataset::new(features, labels, groups, num_classes, num_groups)
}
