//! Reparameterization gradient estimators, their certified bounds and the
//! Monte Carlo harness that measures them.

mod bounds;
mod empirical;
mod sampler;

pub use bounds::{
    component_terms, esn_bound_friendly, esn_bound_matrix, esn_bound_scalar, esn_bound_subsampled,
    esn_bound_subsampled_friendly, variance_lower_bound, variance_lower_bound_single, Mode,
};
pub use empirical::{empirical_esn, EsnEstimate, Estimator};
pub use sampler::{SamplerDist, SamplerLabel, DEGENERATE_MASS};

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Result};
use crate::locscale::Params;
use crate::targets::Target;

/// Gradient with respect to `w = (m, C)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradSample {
    pub gm: DVector<f64>,
    pub gc: DMatrix<f64>,
}

impl GradSample {
    pub fn zeros(d: usize) -> Self {
        Self {
            gm: DVector::zeros(d),
            gc: DMatrix::zeros(d, d),
        }
    }

    /// `||gm||^2 + ||gC||_F^2`.
    pub fn sq_norm(&self) -> f64 {
        self.gm.norm_squared() + self.gc.norm_squared()
    }

    /// Chain rule through `z = C u + m`: `gm = gamma`, `gC = gamma u^T`.
    fn through_affine(gamma: DVector<f64>, u: &DVector<f64>) -> Self {
        let gc = &gamma * u.transpose();
        Self { gm: gamma, gc }
    }
}

/// `grad_w f(T_w(u))`.
pub fn rp_gradient(target: &Target, w: &Params, u: &DVector<f64>) -> Result<GradSample> {
    check_dim(target.dim(), w.dim())?;
    let z = w.transform(u)?;
    Ok(GradSample::through_affine(target.grad(&z)?, u))
}

/// `grad_w f_n(T_w(u)) / pi(n)`.
pub fn subsampled_gradient(
    target: &Target,
    w: &Params,
    u: &DVector<f64>,
    n: usize,
    pi: &SamplerDist,
) -> Result<GradSample> {
    check_dim(target.dim(), w.dim())?;
    check_dim(target.num_components(), pi.len())?;
    let z = w.transform(u)?;
    let gamma = target.component_grad(n, &z)? / pi.weight(n);
    Ok(GradSample::through_affine(gamma, u))
}
