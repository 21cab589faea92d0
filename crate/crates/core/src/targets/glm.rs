//! Bayesian linear and logistic regression with an isotropic Gaussian prior.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::spd_inverse;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlmKind {
    Linear,
    Logistic,
}

impl GlmKind {
    pub fn name(self) -> &'static str {
        match self {
            GlmKind::Linear => "linear",
            GlmKind::Logistic => "logistic",
        }
    }
}

impl std::str::FromStr for GlmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "linear" => Ok(GlmKind::Linear),
            "logistic" => Ok(GlmKind::Logistic),
            other => Err(Error::InvalidParameter(format!("unknown model {other:?}"))),
        }
    }
}

/// `log N(z | 0, sigma2 I) + sum_n log p(y_n | z, x_n)`.
#[derive(Clone, Debug)]
pub struct GlmTarget {
    kind: GlmKind,
    data: Dataset,
    sigma2: f64,
    rho2: f64,
    // linear only: X^T X and X^T y
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
}

/// `log sigmoid(t)` without overflow.
pub fn log_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp().ln_1p()
    } else {
        t - t.exp().ln_1p()
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl GlmTarget {
    /// `rho2` is the observation noise variance and is ignored for logistic
    /// models.
    pub fn new(kind: GlmKind, data: Dataset, sigma2: f64, rho2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!("prior variance must be positive, got {sigma2}")));
        }
        if kind == GlmKind::Linear && !(rho2 > 0.0 && rho2.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise variance must be positive, got {rho2}")));
        }
        if kind == GlmKind::Logistic && !data.is_binary() {
            return Err(Error::InvalidParameter("logistic labels must be -1 or +1".into()));
        }
        let (xtx, xty) = match kind {
            GlmKind::Linear => (data.x().tr_mul(data.x()), data.x().tr_mul(data.y())),
            GlmKind::Logistic => (DMatrix::zeros(0, 0), DVector::zeros(0)),
        };
        Ok(Self {
            kind,
            data,
            sigma2,
            rho2,
            xtx,
            xty,
        })
    }

    pub fn kind(&self) -> GlmKind {
        self.kind
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn rho2(&self) -> f64 {
        self.rho2
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Upper bound on the curvature magnitude of one likelihood term along
    /// its feature direction: `1/rho2` for linear, `1/4` for logistic.
    pub fn curvature_bound(&self) -> f64 {
        match self.kind {
            GlmKind::Linear => 1.0 / self.rho2,
            GlmKind::Logistic => 0.25,
        }
    }

    fn log_prior(&self, z: &DVector<f64>) -> f64 {
        let d = z.len() as f64;
        -0.5 * d * (2.0 * PI * self.sigma2).ln() - 0.5 * z.norm_squared() / self.sigma2
    }

    fn log_lik(&self, n: usize, z: &DVector<f64>) -> f64 {
        let t = self.data.x().row(n).transpose().dot(z);
        let y = self.data.y()[n];
        match self.kind {
            GlmKind::Linear => {
                -0.5 * (2.0 * PI * self.rho2).ln() - 0.5 * (y - t).powi(2) / self.rho2
            }
            GlmKind::Logistic => log_sigmoid(y * t),
        }
    }

    /// d/dt of the likelihood term at `t = x_n^T z`.
    fn lik_slope(&self, n: usize, t: f64) -> f64 {
        let y = self.data.y()[n];
        match self.kind {
            GlmKind::Linear => (y - t) / self.rho2,
            GlmKind::Logistic => y * sigmoid(-y * t),
        }
    }

    /// Magnitude of d2/dt2 of the likelihood term.
    fn lik_curvature(&self, t: f64) -> f64 {
        match self.kind {
            GlmKind::Linear => 1.0 / self.rho2,
            GlmKind::Logistic => {
                let s = sigmoid(t);
                s * (1.0 - s)
            }
        }
    }

    pub fn log_density(&self, z: &DVector<f64>) -> f64 {
        (0..self.len()).map(|n| self.log_lik(n, z)).sum::<f64>() + self.log_prior(z)
    }

    pub fn grad_into(&self, z: &DVector<f64>, out: &mut DVector<f64>) {
        match self.kind {
            GlmKind::Linear => {
                out.copy_from(&self.xty);
                out.gemv(-1.0, &self.xtx, z, 1.0);
                *out /= self.rho2;
            }
            GlmKind::Logistic => {
                let t = self.data.x() * z;
                let slopes = DVector::from_fn(self.len(), |n, _| self.lik_slope(n, t[n]));
                out.gemv_tr(1.0, self.data.x(), &slopes, 0.0);
            }
        }
        out.axpy(-1.0 / self.sigma2, z, 1.0);
    }

    /// Gradients at every column of `z` (`d x B`), as two matrix products.
    pub fn grad_batch_into(&self, z: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        match self.kind {
            GlmKind::Linear => {
                for mut col in out.column_iter_mut() {
                    col.copy_from(&self.xty);
                }
                out.gemm(-1.0, &self.xtx, z, 1.0);
                *out /= self.rho2;
            }
            GlmKind::Logistic => {
                let mut t = self.data.x() * z;
                for mut col in t.column_iter_mut() {
                    for (n, v) in col.iter_mut().enumerate() {
                        *v = self.lik_slope(n, *v);
                    }
                }
                out.gemm_tr(1.0, self.data.x(), &t, 0.0);
            }
        }
        *out -= z / self.sigma2;
    }

    pub fn hessian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        let mut h = match self.kind {
            GlmKind::Linear => &self.xtx / self.rho2,
            GlmKind::Logistic => {
                let t = self.data.x() * z;
                let weighted =
                    DMatrix::from_fn(self.len(), d, |n, j| self.data.x()[(n, j)] * self.lik_curvature(t[n]));
                weighted.tr_mul(self.data.x())
            }
        };
        for i in 0..d {
            h[(i, i)] += 1.0 / self.sigma2;
        }
        -h
    }

    fn prior_share(&self) -> f64 {
        1.0 / self.len() as f64
    }

    /// `f_n(z) = (1/N) log p(z) + log p(y_n | z, x_n)`.
    pub fn component_log_density(&self, n: usize, z: &DVector<f64>) -> f64 {
        self.prior_share() * self.log_prior(z) + self.log_lik(n, z)
    }

    pub fn component_grad_into(&self, n: usize, z: &DVector<f64>, out: &mut DVector<f64>) {
        let x = self.data.x().row(n);
        let t = x.transpose().dot(z);
        let slope = self.lik_slope(n, t);
        let share = self.prior_share() / self.sigma2;
        for j in 0..z.len() {
            out[j] = slope * x[j] - share * z[j];
        }
    }

    pub fn component_hessian(&self, n: usize, z: &DVector<f64>) -> DMatrix<f64> {
        let x = self.data.x().row(n).transpose();
        let curv = self.lik_curvature(x.dot(z));
        let mut h = &x * x.transpose() * curv;
        let share = self.prior_share() / self.sigma2;
        for i in 0..x.len() {
            h[(i, i)] += share;
        }
        -h
    }

    fn require_linear(&self) -> Result<()> {
        match self.kind {
            GlmKind::Linear => Ok(()),
            GlmKind::Logistic => Err(Error::UnsupportedModel(
                "closed-form posterior exists only for linear regression",
            )),
        }
    }

    /// Posterior precision `X^T X / rho2 + I / sigma2`.
    fn posterior_precision(&self) -> DMatrix<f64> {
        let mut p = &self.xtx / self.rho2;
        for i in 0..self.dim() {
            p[(i, i)] += 1.0 / self.sigma2;
        }
        p
    }

    /// Exact Gaussian posterior `(mu, Sigma)` of the linear model, with
    /// `Sigma = (b X^T X + c I)^-1`, `mu = Sigma b X^T y`, `b = 1/rho2`,
    /// `c = 1/sigma2`.
    pub fn exact_posterior(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.require_linear()?;
        let sigma = spd_inverse(&self.posterior_precision())?;
        let mu = &sigma * &self.xty / self.rho2;
        Ok((mu, sigma))
    }

    /// `log p(y | X)` for the linear model: `y ~ N(0, rho2 I + sigma2 X X^T)`,
    /// evaluated in d dimensions via Woodbury and the determinant lemma.
    pub fn log_marginal_likelihood(&self) -> Result<f64> {
        self.require_linear()?;
        let n = self.len() as f64;
        let d = self.dim() as f64;
        let chol = self.posterior_precision().cholesky().ok_or(Error::Singular)?;
        let log_det_p = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        // det(rho2 I + sigma2 X X^T) = rho2^N sigma2^d det(P)
        let log_det = n * self.rho2.ln() + d * self.sigma2.ln() + log_det_p;
        let solved = chol.solve(&self.xty);
        let quad = (self.data.y().norm_squared() - self.xty.dot(&solved) / self.rho2) / self.rho2;
        Ok(-0.5 * (n * (2.0 * PI).ln() + log_det + quad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_datum(kind: GlmKind, x: f64, y: f64) -> GlmTarget {
        let ds = Dataset::from_rows(&[vec![x]], vec![y]).unwrap();
        GlmTarget::new(kind, ds, 1.0, 1.0).unwrap()
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!(log_sigmoid(-800.0).is_finite());
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-12);
        assert!(log_sigmoid(800.0) == 0.0);
        assert!((sigmoid(-800.0)).abs() < 1e-300 && sigmoid(800.0) == 1.0);
    }

    #[test]
    fn logistic_single_datum_at_origin() {
        let t = one_datum(GlmKind::Logistic, 1.0, 1.0);
        let z = DVector::from_vec(vec![0.0]);
        let want = -0.5 * (2.0 * PI).ln() + 0.5f64.ln();
        assert!((t.log_density(&z) - want).abs() < 1e-14);
    }

    #[test]
    fn prior_only_linear() {
        let ds = Dataset::new(DMatrix::zeros(0, 2), DVector::zeros(0)).unwrap();
        let t = GlmTarget::new(GlmKind::Linear, ds, 2.0, 4.0).unwrap();
        let z = DVector::from_vec(vec![1.0, -1.0]);
        let want = -(2.0 * PI * 2.0).ln() - 0.5 * 2.0 / 2.0;
        assert!((t.log_density(&z) - want).abs() < 1e-14);
    }

    #[test]
    fn one_dimensional_evidence() {
        let t = one_datum(GlmKind::Linear, 1.0, 0.0);
        let want = -0.5 * (2.0 * PI * 2.0).ln();
        assert!((t.log_marginal_likelihood().unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_design_posterior() {
        let ds = Dataset::new(DMatrix::identity(3, 3), DVector::zeros(3)).unwrap();
        let t = GlmTarget::new(GlmKind::Linear, ds, 1.0, 4.0).unwrap();
        let (mu, sigma) = t.exact_posterior().unwrap();
        assert!(mu.amax() == 0.0);
        let expected = DMatrix::<f64>::identity(3, 3) / (0.25 + 1.0);
        assert!((sigma - expected).amax() < 1e-15);
    }

    #[test]
    fn logistic_has_no_closed_form() {
        let t = one_datum(GlmKind::Logistic, 1.0, -1.0);
        assert!(matches!(t.exact_posterior(), Err(Error::UnsupportedModel(_))));
        assert!(matches!(t.log_marginal_likelihood(), Err(Error::UnsupportedModel(_))));
    }

    #[test]
    fn logistic_rejects_real_labels() {
        let ds = Dataset::from_rows(&[vec![1.0]], vec![0.5]).unwrap();
        assert!(GlmTarget::new(GlmKind::Logistic, ds, 1.0, 1.0).is_err());
    }
}
