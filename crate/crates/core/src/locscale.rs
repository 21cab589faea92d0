//! Location-scale variational parameters `w = (m, C)` and the affine map
//! `z = C u + m`.

use nalgebra::{DMatrix, DVector};

use crate::base::StandardizedBase;
use crate::error::{check_dim, Error, Result};
use crate::linalg::log_abs_det;

/// Location vector plus full square scale matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub m: DVector<f64>,
    pub c: DMatrix<f64>,
}

impl Params {
    pub fn new(m: DVector<f64>, c: DMatrix<f64>) -> Result<Self> {
        check_dim(m.len(), c.nrows())?;
        check_dim(m.len(), c.ncols())?;
        Ok(Self { m, c })
    }

    /// `(z, 0)`: all mass at `z`.
    pub fn point_mass(z: DVector<f64>) -> Self {
        let d = z.len();
        Self {
            m: z,
            c: DMatrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn transform(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), u.len())?;
        Ok(&self.c * u + &self.m)
    }

    /// `transform` into a caller-owned buffer; dimensions are not checked.
    pub(crate) fn transform_into(&self, u: &DVector<f64>, z: &mut DVector<f64>) {
        z.copy_from(&self.m);
        z.gemv(1.0, &self.c, u, 1.0);
    }

    /// `Entropy(s) + log|det C|`.
    pub fn entropy(&self, base: &StandardizedBase) -> Result<f64> {
        Ok(base.entropy(self.dim()) + log_abs_det(&self.c)?)
    }

    /// `(||m - zbar||^2, ||C||_F^2)`, the two pieces of `||w - wbar||^2`
    /// for `wbar = (zbar, 0)`.
    pub fn sq_distance(&self, zbar: &DVector<f64>) -> Result<(f64, f64)> {
        check_dim(self.dim(), zbar.len())?;
        Ok(((&self.m - zbar).norm_squared(), self.c.norm_squared()))
    }

    /// Flat row: `d`, then `m`, then `C` row-major.
    pub fn to_row(&self) -> Vec<f64> {
        let d = self.dim();
        let mut row = Vec::with_capacity(1 + d + d * d);
        row.push(d as f64);
        row.extend(self.m.iter());
        for i in 0..d {
            row.extend(self.c.row(i).iter());
        }
        row
    }

    /// Inverse of [`Params::to_row`].
    pub fn from_row(row: &[f64]) -> Result<Self> {
        let first = *row
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty parameter row".into()))?;
        if !(first >= 1.0 && first.fract() == 0.0 && first <= 1e6) {
            return Err(Error::InvalidParameter(format!("bad dimension field {first}")));
        }
        let d = first as usize;
        check_dim(1 + d + d * d, row.len())?;
        let m = DVector::from_column_slice(&row[1..1 + d]);
        let c = DMatrix::from_row_slice(d, d, &row[1 + d..]);
        Ok(Self { m, c })
    }
}

/// Proximal step for the entropy term: keeps the singular vectors of `c`
/// and maps each singular value to `(s + sqrt(s^2 + 4 gamma)) / 2`, the
/// solution of `s' (s' - s) = gamma`. The result is always nonsingular.
pub fn entropy_prox(c: &DMatrix<f64>, gamma: f64) -> Result<DMatrix<f64>> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("prox step must be positive, got {gamma}")));
    }
    if c.nrows() != c.ncols() {
        return Err(Error::DimensionMismatch {
            expected: c.nrows(),
            found: c.ncols(),
        });
    }
    let svd = c.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let shrunk = svd
        .singular_values
        .map(|s| 0.5 * (s + (s * s + 4.0 * gamma).sqrt()));
    Ok(u * DMatrix::from_diagonal(&shrunk) * v_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(d: usize, vals: &[f64]) -> Params {
        Params::new(
            DVector::from_column_slice(&vals[..d]),
            DMatrix::from_row_slice(d, d, &vals[d..d + d * d]),
        )
        .unwrap()
    }

    #[test]
    fn transform_examples() {
        let zbar = DVector::from_vec(vec![1.0, -2.0]);
        let u = DVector::from_vec(vec![0.3, 0.7]);
        assert_eq!(Params::point_mass(zbar.clone()).transform(&u).unwrap(), zbar);

        let id = Params::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        assert_eq!(id.transform(&u).unwrap(), u);

        let w = params(2, &[1.0, 0.0, 2.0, 0.0, 1.0, 1.0]);
        let z = w.transform(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(z.as_slice(), &[3.0, 2.0]);

        assert!(matches!(
            w.transform(&DVector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn entropy_examples() {
        let g = StandardizedBase::gaussian();
        let id = Params::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        assert!((id.entropy(&g).unwrap() - 2.837_877_066_409_345).abs() < 1e-12);

        let two = Params::new(DVector::zeros(1), DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert!((two.entropy(&g).unwrap() - (g.entropy(1) + 2f64.ln())).abs() < 1e-12);

        let singular = params(2, &[0.0, 0.0, 1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(singular.entropy(&g), Err(Error::Singular)));
    }

    #[test]
    fn prox_of_zero_gives_sqrt_gamma() {
        let out = entropy_prox(&DMatrix::zeros(3, 3), 1.0).unwrap();
        let sv = out.singular_values();
        for s in sv.iter() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        let out = entropy_prox(&DMatrix::zeros(2, 2), 0.25).unwrap();
        for s in out.singular_values().iter() {
            assert!((s - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn prox_scalar_matches_root_of_optimality_condition() {
        // bisection on s' - 3 = 0.25 / s' over [3, 4]
        let (mut lo, mut hi) = (3.0f64, 4.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - 3.0 - 0.25 / mid > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let out = entropy_prox(&DMatrix::from_element(1, 1, 3.0), 0.25).unwrap();
        assert!((out[(0, 0)] - lo).abs() < 1e-12);
        assert!((out[(0, 0)] - 3.081_138_830_084_19).abs() < 1e-12);
    }

    #[test]
    fn prox_rejects_bad_gamma() {
        assert!(entropy_prox(&DMatrix::identity(2, 2), 0.0).is_err());
        assert!(entropy_prox(&DMatrix::identity(2, 2), f64::NAN).is_err());
    }

    #[test]
    fn sq_distance_examples() {
        let zbar = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(Params::point_mass(zbar.clone()).sq_distance(&zbar).unwrap(), (0.0, 0.0));
        let w = Params::point_mass(DVector::from_vec(vec![4.0, 5.0]));
        assert_eq!(w.sq_distance(&zbar).unwrap(), (25.0, 0.0));
        let z3 = DVector::zeros(3);
        let w = Params::new(z3.clone(), DMatrix::identity(3, 3)).unwrap();
        assert_eq!(w.sq_distance(&z3).unwrap(), (0.0, 3.0));
    }

    #[test]
    fn row_rejects_garbage() {
        assert!(Params::from_row(&[]).is_err());
        assert!(Params::from_row(&[2.0, 1.0]).is_err());
        assert!(Params::from_row(&[1.5, 1.0, 1.0]).is_err());
        assert!(Params::from_row(&[f64::NAN]).is_err());
    }

    fn square(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0..3.0f64, d + d * d)
    }

    proptest! {
        #[test]
        fn transform_is_affine(vals in square(3), u1 in prop::collection::vec(-2.0..2.0f64, 3),
                               u2 in prop::collection::vec(-2.0..2.0f64, 3), alpha in 0.0..1.0f64) {
            let w = params(3, &vals);
            let u1 = DVector::from_vec(u1);
            let u2 = DVector::from_vec(u2);
            let mixed = w.transform(&(&u1 * alpha + &u2 * (1.0 - alpha))).unwrap();
            let combo = w.transform(&u1).unwrap() * alpha + w.transform(&u2).unwrap() * (1.0 - alpha);
            prop_assert!((mixed - combo).amax() < 1e-12);
        }

        #[test]
        fn prox_output_is_finite_entropy_and_grows_singular_values(
            vals in square(4), gamma in 1e-3..10.0f64
        ) {
            let w = params(4, &vals);
            let out = entropy_prox(&w.c, gamma).unwrap();
            let before = w.c.singular_values();
            let after = out.singular_values();
            let g = StandardizedBase::gaussian();
            let h = Params::new(w.m.clone(), out.clone()).unwrap().entropy(&g).unwrap();
            prop_assert!(h.is_finite());
            // both lists are sorted descending
            for (b, a) in before.iter().zip(after.iter()) {
                prop_assert!(*a >= *b);
                prop_assert!((a * (a - b) - gamma).abs() <= 1e-9 * (1.0 + gamma));
            }
        }

        #[test]
        fn row_round_trip(vals in square(3)) {
            let w = params(3, &vals);
            prop_assert_eq!(Params::from_row(&w.to_row()).unwrap(), w);
        }
    }
}
