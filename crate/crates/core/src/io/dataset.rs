//! Dense CSV and LIBSVM dataset readers.
//!
//! CSV: one datum per line, features then the label in the last column.
//! LIBSVM: `label idx:val ...` with 1-based sparse indices, densified.
//! Blank lines and lines starting with `#` are skipped in both formats.

use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use super::fmt_f64;
use crate::error::{parse_err, Error, Result};
use crate::targets::{Dataset, LabelKind};

/// Largest dense design matrix the readers will build.
pub const MAX_ENTRIES: usize = 1 << 27;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Libsvm,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(DataFormat::Csv),
            "libsvm" => Ok(DataFormat::Libsvm),
            other => Err(Error::InvalidParameter(format!("unknown data format {other:?}"))),
        }
    }
}

impl DataFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            DataFormat::Csv => "csv",
            DataFormat::Libsvm => "libsvm",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadOptions {
    pub format: DataFormat,
    pub labels: LabelKind,
    pub add_intercept: bool,
    pub standardize: bool,
    /// LIBSVM feature count; inferred from the largest index when `None`.
    pub features: Option<usize>,
}

impl LoadOptions {
    pub fn new(format: DataFormat, labels: LabelKind) -> Self {
        Self {
            format,
            labels,
            add_intercept: false,
            standardize: false,
            features: None,
        }
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn number(line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("not a number: {tok:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(line, format!("non-finite value {tok:?}")))
    }
}

fn map_label(line: usize, v: f64, kind: LabelKind) -> Result<f64> {
    match kind {
        LabelKind::Real => Ok(v),
        LabelKind::Binary if v == 0.0 || v == -1.0 => Ok(-1.0),
        LabelKind::Binary if v == 1.0 => Ok(1.0),
        LabelKind::Binary => Err(parse_err(line, format!("label {v} is not one of 0, -1, 1, +1"))),
    }
}

fn check_size(rows: usize, cols: usize) -> Result<()> {
    match rows.checked_mul(cols) {
        Some(n) if n <= MAX_ENTRIES => Ok(()),
        _ => Err(Error::InvalidParameter(format!(
            "dataset of {rows} x {cols} is too large to densify"
        ))),
    }
}

fn parse_csv(text: &str, labels: LabelKind) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let mut flat = Vec::new();
    let mut y = Vec::new();
    let mut width = None;
    for (line, content) in data_lines(text) {
        let fields: Vec<&str> = content.split(',').collect();
        if fields.len() < 2 {
            return Err(parse_err(line, "need at least one feature and a label"));
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(parse_err(line, format!("expected {w} fields, found {}", fields.len())))
            }
            Some(_) => {}
        }
        let (label, feats) = fields.split_last().expect("at least two fields");
        for f in feats {
            flat.push(number(line, f)?);
        }
        y.push(map_label(line, number(line, label)?, labels)?);
        check_size(y.len(), fields.len() - 1)?;
    }
    let d = width.map_or(0, |w| w - 1);
    Ok((flat, y, d))
}

fn parse_libsvm(
    text: &str,
    labels: LabelKind,
    features: Option<usize>,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut y = Vec::new();
    let mut max_idx = 0usize;
    for (line, content) in data_lines(text) {
        let mut toks = content.split_whitespace();
        let label = toks.next().expect("non-empty line has a token");
        y.push(map_label(line, number(line, label)?, labels)?);
        let mut row = Vec::new();
        for tok in toks {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(line, format!("expected idx:val, found {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(line, format!("bad feature index {idx:?}")))?;
            if idx == 0 {
                return Err(parse_err(line, "feature indices are 1-based"));
            }
            if let Some(d) = features {
                if idx > d {
                    return Err(parse_err(line, format!("feature index {idx} exceeds {d}")));
                }
            }
            row.push((idx - 1, number(line, val)?));
            max_idx = max_idx.max(idx);
        }
        check_size(y.len(), features.unwrap_or(max_idx))?;
        row.sort_unstable_by_key(|&(j, _)| j);
        if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(parse_err(line, format!("duplicate feature index {}", w[0].0 + 1)));
        }
        sparse.push(row);
    }
    let d = features.unwrap_or(max_idx);
    let mut flat = vec![0.0; sparse.len() * d];
    for (i, row) in sparse.iter().enumerate() {
        for &(j, v) in row {
            flat[i * d + j] = v;
        }
    }
    Ok((flat, y, d))
}

/// Parses dataset text. Errors carry 1-based line numbers.
pub fn parse_dataset(text: &str, opts: &LoadOptions) -> Result<Dataset> {
    let (flat, y, d) = match opts.format {
        DataFormat::Csv => parse_csv(text, opts.labels)?,
        DataFormat::Libsvm => parse_libsvm(text, opts.labels, opts.features)?,
    };
    if y.is_empty() {
        return Err(parse_err(0, "no data rows"));
    }
    if d == 0 {
        return Err(parse_err(0, "no features"));
    }
    let x = DMatrix::from_row_slice(y.len(), d, &flat);
    let mut ds = Dataset::new(x, DVector::from_vec(y))?;
    if opts.standardize {
        ds.standardize();
    }
    if opts.add_intercept {
        ds.add_intercept();
    }
    Ok(ds)
}

pub fn load_dataset(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text, opts)
}

/// Dense CSV at full precision; `parse_dataset` reads it back exactly.
pub fn write_csv(ds: &Dataset) -> String {
    let mut out = String::new();
    for i in 0..ds.len() {
        for v in ds.x().row(i).iter() {
            out.push_str(&fmt_f64(*v));
            out.push(',');
        }
        out.push_str(&fmt_f64(ds.y()[i]));
        out.push('\n');
    }
    out
}
