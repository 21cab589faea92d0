//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 100_000;

/// Spectral norm of a symmetric matrix by power iteration.
///
/// Two deterministic start vectors are used (all-ones, then an irregular
/// one) and the larger estimate is returned, so a top eigenvector that is
/// orthogonal to the all-ones direction is still found.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let d = m.nrows();
    if d == 0 {
        return 0.0;
    }
    let ones = DVector::from_element(d, 1.0);
    let irregular = DVector::from_fn(d, |i, _| 1.0 + 0.5 * ((i as f64 + 1.0) * 1.618_033_988_7).sin());
    power_iteration(m, ones).max(power_iteration(m, irregular))
}

fn power_iteration(m: &DMatrix<f64>, start: DVector<f64>) -> f64 {
    let norm = start.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let mut v = start / norm;
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let mv = m * &v;
        let next = mv.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = mv / next;
        if (next - estimate).abs() <= POWER_TOL * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// `log |det a|` from the LU factors; errors when `a` is singular.
pub fn log_abs_det(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let mut acc = 0.0;
    for i in 0..u.nrows() {
        let p = u[(i, i)].abs();
        if p == 0.0 || !p.is_finite() {
            return Err(Error::Singular);
        }
        acc += p.ln();
    }
    Ok(acc)
}

pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Checks symmetry (absolute 1e-12 scaled by the largest entry) and that
/// the smallest eigenvalue is not meaningfully negative.
pub fn check_symmetric_psd(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidParameter(format!("{what} is not square")));
    }
    let scale = a.amax().max(1.0);
    if max_asymmetry(a) > 1e-12 * scale {
        return Err(Error::InvalidParameter(format!("{what} is not symmetric")));
    }
    let eig = a.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * scale {
        return Err(Error::InvalidParameter(format!(
            "{what} is not positive semidefinite (eigenvalue {min:e})"
        )));
    }
    Ok(())
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone().cholesky().map(|c| c.inverse()).ok_or(Error::Singular)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_matches_eigensolver() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0]);
        let top = a.clone().symmetric_eigen().eigenvalues.amax();
        assert!((spectral_norm(&a) - top).abs() <= 1e-10 * top);
    }

    #[test]
    fn spectral_norm_finds_direction_orthogonal_to_ones() {
        // top eigenvector is (1, -1)/sqrt2, orthogonal to the all-ones start
        let a = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        assert!((spectral_norm(&a) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn log_abs_det_sign_insensitive() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 3.0, 0.0]);
        assert!((log_abs_det(&a).unwrap() - 6f64.ln()).abs() < 1e-14);
        assert!(matches!(log_abs_det(&DMatrix::zeros(2, 2)), Err(Error::Singular)));
    }
}
