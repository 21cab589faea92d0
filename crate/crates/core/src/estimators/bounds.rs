//! Closed-form bounds on the expected squared norm (ESN) of the
//! reparameterization gradient, and the matching variance lower bound.
//!
//! With `d` the dimension and `kappa` the base kurtosis, a component with
//! smoothness matrix `M` and stationary point `zbar` contributes
//! `(d + 1) ||M (m - zbar)||^2 + (d + kappa) ||M C||_F^2` to the ESN bound and
//! `d ||M (m - zbar)||^2 + (d + kappa - 1) ||M C||_F^2` to the variance floor.

use nalgebra::{DMatrix, DVector};

use super::sampler::SamplerDist;
use crate::error::{check_dim, Error, Result};
use crate::locscale::Params;
use crate::smoothness::SmoothnessSpec;

/// Which per-component smoothness certificate a bound uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Scalar,
    Matrix,
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa >= 1.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("kurtosis must be >= 1, got {kappa}")))
    }
}

fn check_scalar(m: f64) -> Result<()> {
    if m >= 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("smoothness constant must be >= 0, got {m}")))
    }
}

/// `(d + 1 - shift) loc + (d + kappa - shift) scale`.
fn weighted(d: usize, kappa: f64, loc: f64, scale: f64, shift: f64) -> f64 {
    let d = d as f64;
    (d + 1.0 - shift) * loc + (d + kappa - shift) * scale
}

/// `M^2 ((d+1) ||m - zbar||^2 + (d+kappa) ||C||_F^2)`.
pub fn esn_bound_scalar(m_scalar: f64, w: &Params, zbar: &DVector<f64>, kappa: f64) -> Result<f64> {
    check_scalar(m_scalar)?;
    check_kappa(kappa)?;
    let (loc, scale) = w.sq_distance(zbar)?;
    Ok(m_scalar * m_scalar * weighted(w.dim(), kappa, loc, scale, 0.0))
}

/// `(d + kappa) M^2 ||w - wbar||^2`, the scalar bound with `d + 1` relaxed
/// to `d + kappa`.
pub fn esn_bound_friendly(m_scalar: f64, w: &Params, zbar: &DVector<f64>, kappa: f64) -> Result<f64> {
    check_scalar(m_scalar)?;
    check_kappa(kappa)?;
    let (loc, scale) = w.sq_distance(zbar)?;
    Ok((w.dim() as f64 + kappa) * m_scalar * m_scalar * (loc + scale))
}

fn matrix_parts(m: &DMatrix<f64>, w: &Params, zbar: &DVector<f64>) -> Result<(f64, f64)> {
    check_dim(w.dim(), m.nrows())?;
    check_dim(w.dim(), m.ncols())?;
    check_dim(w.dim(), zbar.len())?;
    Ok(((m * (&w.m - zbar)).norm_squared(), (m * &w.c).norm_squared()))
}

/// `(d+1) ||M (m - zbar)||^2 + (d+kappa) ||M C||_F^2`.
pub fn esn_bound_matrix(m: &DMatrix<f64>, w: &Params, zbar: &DVector<f64>, kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    let (loc, scale) = matrix_parts(m, w, zbar)?;
    Ok(weighted(w.dim(), kappa, loc, scale, 0.0))
}

/// Variance floor for a single (unsubsampled) quadratic witness:
/// `d ||M (m - zbar)||^2 + (d + kappa - 1) ||M C||_F^2`.
pub fn variance_lower_bound_single(
    m: &DMatrix<f64>,
    w: &Params,
    zbar: &DVector<f64>,
    kappa: f64,
) -> Result<f64> {
    check_kappa(kappa)?;
    let (loc, scale) = matrix_parts(m, w, zbar)?;
    Ok(weighted(w.dim(), kappa, loc, scale, 1.0))
}

fn check_components(spec: &SmoothnessSpec, zbars: &[DVector<f64>], w: &Params) -> Result<()> {
    check_dim(spec.components.len(), zbars.len())?;
    check_dim(spec.dim(), w.dim())?;
    for z in zbars {
        check_dim(w.dim(), z.len())?;
    }
    Ok(())
}

fn component_parts(
    spec: &SmoothnessSpec,
    zbars: &[DVector<f64>],
    w: &Params,
    mode: Mode,
) -> Result<Vec<(f64, f64)>> {
    check_components(spec, zbars, w)?;
    let c_sq = w.c.norm_squared();
    Ok(spec
        .components
        .iter()
        .zip(zbars)
        .map(|(comp, zbar)| {
            let diff = &w.m - zbar;
            match mode {
                Mode::Scalar => {
                    let s2 = comp.scalar * comp.scalar;
                    (s2 * diff.norm_squared(), s2 * c_sq)
                }
                Mode::Matrix => (
                    comp.matrix.apply(&diff).norm_squared(),
                    comp.matrix.product_sq_frobenius(&w.c),
                ),
            }
        })
        .collect())
}

/// Per-component ESN bound terms (before dividing by `pi(n)`).
pub fn component_terms(
    spec: &SmoothnessSpec,
    zbars: &[DVector<f64>],
    w: &Params,
    kappa: f64,
    mode: Mode,
) -> Result<Vec<f64>> {
    check_kappa(kappa)?;
    let d = w.dim();
    Ok(component_parts(spec, zbars, w, mode)?
        .into_iter()
        .map(|(loc, scale)| weighted(d, kappa, loc, scale, 0.0))
        .collect())
}

/// `sum_n term_n / pi(n)`, with `0 / pi = 0`.
fn importance_sum(terms: impl IntoIterator<Item = f64>, pi: &SamplerDist) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0;
    for (n, t) in terms.into_iter().enumerate() {
        count += 1;
        if t != 0.0 {
            total += t / pi.weight(n);
        }
    }
    check_dim(pi.len(), count)?;
    Ok(total)
}

/// ESN bound for `g = grad f_n(T_w(u)) / pi(n)` with `n ~ pi`.
pub fn esn_bound_subsampled(
    spec: &SmoothnessSpec,
    zbars: &[DVector<f64>],
    pi: &SamplerDist,
    w: &Params,
    kappa: f64,
    mode: Mode,
) -> Result<f64> {
    importance_sum(component_terms(spec, zbars, w, kappa, mode)?, pi)
}

/// Subsampled analogue of [`esn_bound_friendly`]:
/// `sum_n (d + kappa) M_n^2 ||w - wbar_n||^2 / pi(n)`.
pub fn esn_bound_subsampled_friendly(
    spec: &SmoothnessSpec,
    zbars: &[DVector<f64>],
    pi: &SamplerDist,
    w: &Params,
    kappa: f64,
) -> Result<f64> {
    check_kappa(kappa)?;
    let factor = w.dim() as f64 + kappa;
    let terms = component_parts(spec, zbars, w, Mode::Scalar)?
        .into_iter()
        .map(|(loc, scale)| factor * (loc + scale));
    importance_sum(terms, pi)
}

/// Variance lower bound attained by quadratic components with matrices
/// `M_n` and stationary points `zbar_n`.
pub fn variance_lower_bound(
    spec: &SmoothnessSpec,
    zbars: &[DVector<f64>],
    pi: &SamplerDist,
    w: &Params,
    kappa: f64,
) -> Result<f64> {
    check_kappa(kappa)?;
    let d = w.dim();
    let terms = component_parts(spec, zbars, w, Mode::Matrix)?
        .into_iter()
        .map(|(loc, scale)| weighted(d, kappa, loc, scale, 1.0));
    importance_sum(terms, pi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(m: f64, c: f64) -> Params {
        Params::new(DVector::from_vec(vec![m]), DMatrix::from_element(1, 1, c)).unwrap()
    }

    #[test]
    fn scalar_bound_direct_evaluation() {
        let w = one_d(1.0, 1.0);
        let zbar = DVector::zeros(1);
        assert!((esn_bound_scalar(2.0, &w, &zbar, 3.0).unwrap() - 24.0).abs() < 1e-12);
        assert!((esn_bound_friendly(2.0, &w, &zbar, 3.0).unwrap() - 32.0).abs() < 1e-12);
    }

    #[test]
    fn zero_at_reference_point() {
        let zbar = DVector::from_vec(vec![1.0, 2.0]);
        let w = Params::point_mass(zbar.clone());
        assert_eq!(esn_bound_scalar(5.0, &w, &zbar, 3.0).unwrap(), 0.0);
        assert_eq!(esn_bound_matrix(&DMatrix::identity(2, 2), &w, &zbar, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn friendly_equals_scalar_at_unit_kurtosis() {
        let w = Params::new(
            DVector::from_vec(vec![0.5, -1.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, -0.3, 0.7]),
        )
        .unwrap();
        let zbar = DVector::from_vec(vec![0.1, 0.1]);
        let a = esn_bound_scalar(1.7, &w, &zbar, 1.0).unwrap();
        let b = esn_bound_friendly(1.7, &w, &zbar, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn scaled_identity_matrix_reduces_to_scalar() {
        let w = Params::new(
            DVector::from_vec(vec![0.5, -1.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, -0.3, 0.7]),
        )
        .unwrap();
        let zbar = DVector::from_vec(vec![0.1, 0.1]);
        let a = esn_bound_scalar(1.7, &w, &zbar, 3.0).unwrap();
        let b = esn_bound_matrix(&(DMatrix::identity(2, 2) * 1.7), &w, &zbar, 3.0).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn rejects_bad_constants() {
        let w = one_d(1.0, 1.0);
        let zbar = DVector::zeros(1);
        assert!(esn_bound_scalar(-1.0, &w, &zbar, 3.0).is_err());
        assert!(esn_bound_scalar(1.0, &w, &zbar, 0.5).is_err());
        assert!(esn_bound_matrix(&DMatrix::identity(2, 2), &w, &zbar, 3.0).is_err());
    }
}
