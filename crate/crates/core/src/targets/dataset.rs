use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Regression or classification labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelKind {
    Real,
    /// Labels are exactly -1 or +1.
    Binary,
}

/// Design matrix (one row per datum) and labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    /// `x` is N x d. Zero rows are accepted (prior-only models); d must be
    /// at least one.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        check_dim(x.nrows(), y.len())?;
        if x.ncols() == 0 {
            return Err(Error::InvalidParameter("dataset needs at least one feature".into()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("dataset contains non-finite values".into()));
        }
        Ok(Self { x, y })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        for r in rows {
            check_dim(d, r.len())?;
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), d, &flat), DVector::from_vec(y))
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_binary(&self) -> bool {
        self.y.iter().all(|&v| v == 1.0 || v == -1.0)
    }

    /// Rescales every feature column to mean 0 and (population) standard
    /// deviation 1. Constant columns are centered only.
    pub fn standardize(&mut self) {
        let n = self.len();
        if n == 0 {
            return;
        }
        for mut col in self.x.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
            let sd = (col.norm_squared() / n as f64).sqrt();
            if sd > 0.0 {
                col /= sd;
            }
        }
    }

    /// Appends a constant 1 column.
    pub fn add_intercept(&mut self) {
        let n = self.len();
        let d = self.dim();
        self.x = self.x.clone().insert_column(d, 1.0);
        debug_assert_eq!(self.x.nrows(), n);
    }
}
