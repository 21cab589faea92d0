//! Optimization trace files.
//!
//! ```text
//! #model=linear
//! #seed=0
//! 0,-inf,0,2,0.1,0.2,0,0,0,0
//! 20,-13.2,0.01,2,...
//! ```
//!
//! Header lines are `#key=value`. Each data row is
//! `iteration,elbo_mean,elbo_se` followed by the flattened parameters
//! (`d`, `m`, then `C` row-major).

use super::fmt_f64;
use crate::error::{parse_err, Result};
use crate::locscale::Params;
use crate::optimizer::TraceRecord;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceFile {
    pub header: Vec<(String, String)>,
    pub records: Vec<TraceRecord>,
}

impl TraceFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn write_trace(trace: &TraceFile) -> String {
    let mut out = String::new();
    for (k, v) in &trace.header {
        out.push_str(&format!("#{k}={v}\n"));
    }
    for r in &trace.records {
        out.push_str(&r.iteration.to_string());
        for v in [r.elbo_mean, r.elbo_se].into_iter().chain(r.w.to_row()) {
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    out
}

pub fn parse_trace(text: &str) -> Result<TraceFile> {
    let mut trace = TraceFile::default();
    let mut dim = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            if !trace.records.is_empty() {
                return Err(parse_err(line_no, "header line after data rows"));
            }
            let (k, v) = h
                .split_once('=')
                .ok_or_else(|| parse_err(line_no, "header must be #key=value"))?;
            trace.header.push((k.trim().to_string(), v.trim().to_string()));
            continue;
        }
        let mut fields = line.split(',');
        let iteration: usize = fields
            .next()
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, "bad iteration"))?;
        let values: Vec<f64> = fields
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(line_no, "non-numeric field"))?;
        if values.len() < 3 {
            return Err(parse_err(line_no, "row too short"));
        }
        let w = Params::from_row(&values[2..]).map_err(|e| parse_err(line_no, e.to_string()))?;
        if w.m.iter().chain(w.c.iter()).any(|v| !v.is_finite()) {
            return Err(parse_err(line_no, "non-finite parameter"));
        }
        match dim {
            None => dim = Some(w.dim()),
            Some(d) if d != w.dim() => {
                return Err(parse_err(line_no, format!("dimension {} differs from {d}", w.dim())))
            }
            Some(_) => {}
        }
        if let Some(prev) = trace.records.last() {
            if iteration <= prev.iteration {
                return Err(parse_err(line_no, "iterations must be strictly increasing"));
            }
        }
        trace.records.push(TraceRecord {
            iteration,
            w,
            elbo_mean: values[0],
            elbo_se: values[1],
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn record(iteration: usize, elbo: f64) -> TraceRecord {
        TraceRecord {
            iteration,
            w: Params::new(
                DVector::from_vec(vec![0.1, 1.0 / 3.0]),
                DMatrix::from_row_slice(2, 2, &[1e-300, 2.0, -3.5, 4.0]),
            )
            .unwrap(),
            elbo_mean: elbo,
            elbo_se: 0.25,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let t = TraceFile {
            header: vec![("model".into(), "linear".into()), ("seed".into(), "3".into())],
            records: vec![record(0, f64::NEG_INFINITY), record(20, -12.5)],
        };
        let text = write_trace(&t);
        assert!(text.starts_with("#model=linear\n#seed=3\n0,-inf,0.25,2,"));
        assert_eq!(parse_trace(&text).unwrap(), t);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(parse_trace("x,1,2,1,0,0\n").is_err());
        assert!(parse_trace("0,1,2,2,0,0\n").is_err());
        assert!(parse_trace("1,1,2,1,0,0\n1,1,2,1,0,0\n").is_err());
        assert!(parse_trace("0,1,2,1,0,0\n#late=1\n").is_err());
        assert!(parse_trace("0,1,2,1,0,0\n1,1,2,2,0,0,0,0,0,0\n").is_err());
        assert!(parse_trace("0,1,2,1,nan,0\n").is_err());
    }
}
