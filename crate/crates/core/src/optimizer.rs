//! Proximal stochastic gradient ascent on `ELBO = l + h`.
//!
//! Start at `w = (MAP, 0)`. Each step averages `grad_samples` reparameterization
//! gradients of `l`, takes an ascent step of size `gamma` on `(m, C)`, then
//! applies the entropy prox to `C`. The default step size is the inverse of
//! the target's scalar smoothness constant.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::base::StandardizedBase;
use crate::error::{check_dim, Error, Result};
use crate::estimators::{empirical_esn, Estimator, SamplerDist, SamplerLabel};
use crate::linalg::log_abs_det;
use crate::locscale::{entropy_prox, Params};
use crate::rng::{derive_seed, tags};
use crate::smoothness::SmoothnessSpec;
use crate::targets::Target;

/// How each step's gradient is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradMode {
    Batch,
    Subsampled(SamplerLabel),
}

impl fmt::Display for GradMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GradMode::Batch => f.write_str("batch"),
            GradMode::Subsampled(l) => write!(f, "{l}"),
        }
    }
}

impl FromStr for GradMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "batch" => Ok(GradMode::Batch),
            other => other.parse().map(GradMode::Subsampled),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptConfig {
    /// `None` means `1 / full_scalar`.
    pub step_size: Option<f64>,
    pub iterations: usize,
    pub grad_samples: usize,
    pub mode: GradMode,
    pub seed: u64,
    pub snapshot_every: usize,
    /// Draws for the ELBO estimate attached to each snapshot.
    pub elbo_samples: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            step_size: None,
            iterations: 2000,
            grad_samples: 1000,
            mode: GradMode::Batch,
            seed: 0,
            snapshot_every: 20,
            elbo_samples: 1000,
        }
    }
}

impl OptConfig {
    fn validate(&self) -> Result<()> {
        if let Some(s) = self.step_size {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("step size must be positive, got {s}")));
            }
        }
        if self.iterations == 0 || self.grad_samples == 0 || self.snapshot_every == 0 {
            return Err(Error::InvalidParameter(
                "iterations, grad_samples and snapshot_every must be positive".into(),
            ));
        }
        if self.elbo_samples < 2 {
            return Err(Error::InvalidParameter("elbo_samples must be at least 2".into()));
        }
        Ok(())
    }
}

/// One snapshot of the optimization trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub w: Params,
    pub elbo_mean: f64,
    pub elbo_se: f64,
}

pub fn resolve_step_size(spec: &SmoothnessSpec, config: &OptConfig) -> Result<f64> {
    match config.step_size {
        Some(s) => Ok(s),
        None if spec.full_scalar > 0.0 => Ok(1.0 / spec.full_scalar),
        None => Err(Error::InvalidParameter("target has zero smoothness constant".into())),
    }
}

fn snapshot(
    target: &Target,
    base: &StandardizedBase,
    w: &Params,
    iteration: usize,
    config: &OptConfig,
) -> Result<TraceRecord> {
    let seed = derive_seed(config.seed, tags::OPT_ELBO, iteration as u64);
    let (elbo_mean, elbo_se) = match target.elbo_estimate(w, base, config.elbo_samples, seed) {
        Ok(e) => (e.mean, e.se),
        // point mass: log|det C| = -inf
        Err(Error::Singular) => (f64::NEG_INFINITY, 0.0),
        Err(e) => return Err(e),
    };
    Ok(TraceRecord {
        iteration,
        w: w.clone(),
        elbo_mean,
        elbo_se,
    })
}

/// Runs the optimizer and returns the snapshots (iteration 0, every
/// `snapshot_every` iterations, and the last iteration).
pub fn run(target: &Target, base: &StandardizedBase, config: &OptConfig) -> Result<Vec<TraceRecord>> {
    config.validate()?;
    let spec = SmoothnessSpec::derive(target)?;
    let gamma = resolve_step_size(&spec, config)?;
    let zbar = target.find_map(target.default_tol())?;

    let zbars = match config.mode {
        GradMode::Subsampled(SamplerLabel::OptScalar | SamplerLabel::OptMatrix) => {
            target.component_stationary_points(target.default_tol())?
        }
        _ => Vec::new(),
    };

    let mut w = Params::point_mass(zbar);
    let mut trace = vec![snapshot(target, base, &w, 0, config)?];

    for it in 1..=config.iterations {
        let seed = derive_seed(config.seed, tags::OPT_STEP, it as u64);
        let pi = match config.mode {
            GradMode::Batch => None,
            GradMode::Subsampled(label) => {
                Some(SamplerDist::by_label(label, &spec, &zbars, &w, base.kurtosis())?)
            }
        };
        let estimator = pi.as_ref().map_or(Estimator::Batch, Estimator::Subsampled);
        let grad = if config.grad_samples >= 2 {
            empirical_esn(target, &w, base, estimator, config.grad_samples, seed)?.mean_grad
        } else {
            single_gradient(target, &w, base, estimator, seed)?
        };
        if grad.gm.iter().chain(grad.gc.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                iteration: it,
                trace: Box::new(trace),
            });
        }
        let m = &w.m + &grad.gm * gamma;
        let c = entropy_prox(&(&w.c + &grad.gc * gamma), gamma)?;
        w = Params::new(m, c)?;
        if it % config.snapshot_every == 0 || it == config.iterations {
            trace.push(snapshot(target, base, &w, it, config)?);
        }
    }
    Ok(trace)
}

fn single_gradient(
    target: &Target,
    w: &Params,
    base: &StandardizedBase,
    estimator: Estimator<'_>,
    seed: u64,
) -> Result<crate::estimators::GradSample> {
    let mut rng = crate::rng::stream(seed, 0);
    let u = base.sample(w.dim(), &mut rng);
    match estimator {
        Estimator::Batch => crate::estimators::rp_gradient(target, w, &u),
        Estimator::Subsampled(pi) => {
            let n = pi.sample(&mut rng);
            crate::estimators::subsampled_gradient(target, w, &u, n, pi)
        }
    }
}

/// `KL(N(m, C C^T) || N(mu, sigma))` in nats.
pub fn gaussian_kl(w: &Params, mu: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    let d = w.dim();
    check_dim(d, mu.len())?;
    check_dim(d, sigma.nrows())?;
    check_dim(d, sigma.ncols())?;
    let chol = sigma.clone().cholesky().ok_or(Error::Singular)?;
    let log_det_sigma = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let log_det_q = 2.0 * log_abs_det(&w.c)?;
    let cov_q = &w.c * w.c.transpose();
    let trace_term = chol.solve(&cov_q).trace();
    let diff = mu - &w.m;
    let mahalanobis = diff.dot(&chol.solve(&diff));
    Ok(0.5 * (trace_term + mahalanobis - d as f64 + log_det_sigma - log_det_q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_of_identical_gaussians_is_zero() {
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let mu = DVector::from_vec(vec![1.0, -1.0]);
        let c = sigma.clone().cholesky().unwrap().l();
        let w = Params::new(mu.clone(), c).unwrap();
        assert!(gaussian_kl(&w, &mu, &sigma).unwrap().abs() < 1e-10);
    }

    #[test]
    fn scalar_kl_formula() {
        let mu = DVector::from_vec(vec![0.5]);
        let sigma = DMatrix::from_element(1, 1, 1.5);
        let w = Params::new(mu.clone(), DMatrix::from_element(1, 1, 3f64.sqrt())).unwrap();
        let want = 0.5 * (2.0 - 1.0 - 2f64.ln());
        assert!((gaussian_kl(&w, &mu, &sigma).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.153_426_409_720_027_3).abs() < 1e-12);
    }

    #[test]
    fn kl_rejects_singular() {
        let w = Params::point_mass(DVector::zeros(2));
        assert!(gaussian_kl(&w, &DVector::zeros(2), &DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("batch".parse::<GradMode>().unwrap(), GradMode::Batch);
        assert_eq!(
            "opt_matrix".parse::<GradMode>().unwrap(),
            GradMode::Subsampled(SamplerLabel::OptMatrix)
        );
        assert!("nope".parse::<GradMode>().is_err());
    }

    #[test]
    fn config_validation() {
        let bad = OptConfig {
            step_size: Some(-1.0),
            ..OptConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptConfig {
            iterations: 0,
            ..OptConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
