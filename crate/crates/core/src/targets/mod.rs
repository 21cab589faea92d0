//! Differentiable log-density targets and their finite-sum components.

mod dataset;
mod glm;
mod quadratic;
mod stationary;

pub use dataset::{Dataset, LabelKind};
pub use glm::{log_sigmoid, sigmoid, GlmKind, GlmTarget};
pub use quadratic::{QuadComponent, QuadraticTarget};

use nalgebra::{DMatrix, DVector};

use crate::base::StandardizedBase;
use crate::error::{check_dim, Error, Result};
use crate::locscale::Params;
use crate::mc::{self, Moments};

/// A log-density `f = sum_n f_n` over `R^d`.
#[derive(Clone, Debug)]
pub enum Target {
    Glm(GlmTarget),
    Quadratic(QuadraticTarget),
}

impl From<GlmTarget> for Target {
    fn from(t: GlmTarget) -> Self {
        Target::Glm(t)
    }
}

impl From<QuadraticTarget> for Target {
    fn from(t: QuadraticTarget) -> Self {
        Target::Quadratic(t)
    }
}

/// Monte Carlo ELBO: mean of `f(T_w(u))` plus the exact entropy. `se` is the
/// standard error of the sampled part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElboEstimate {
    pub mean: f64,
    pub se: f64,
}

impl Target {
    pub fn dim(&self) -> usize {
        match self {
            Target::Glm(t) => t.dim(),
            Target::Quadratic(t) => t.dim(),
        }
    }

    pub fn num_components(&self) -> usize {
        match self {
            Target::Glm(t) => t.len(),
            Target::Quadratic(t) => t.components().len(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Target::Glm(t) => t.kind().name(),
            Target::Quadratic(_) => "quadratic",
        }
    }

    fn check_point(&self, z: &DVector<f64>) -> Result<()> {
        check_dim(self.dim(), z.len())
    }

    fn check_index(&self, n: usize) -> Result<()> {
        let len = self.num_components();
        if n < len {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: n, len })
        }
    }

    pub fn log_density(&self, z: &DVector<f64>) -> Result<f64> {
        self.check_point(z)?;
        Ok(self.log_density_unchecked(z))
    }

    pub(crate) fn log_density_unchecked(&self, z: &DVector<f64>) -> f64 {
        match self {
            Target::Glm(t) => t.log_density(z),
            Target::Quadratic(t) => t.log_density(z),
        }
    }

    pub fn grad(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(z)?;
        let mut out = DVector::zeros(self.dim());
        self.grad_into(z, &mut out);
        Ok(out)
    }

    pub(crate) fn grad_into(&self, z: &DVector<f64>, out: &mut DVector<f64>) {
        match self {
            Target::Glm(t) => t.grad_into(z, out),
            Target::Quadratic(t) => t.grad_into(z, out),
        }
    }

    /// Gradients at every column of `z` (`d x B`) into `out`; dimensions
    /// are not checked.
    pub(crate) fn grad_batch_into(&self, z: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        match self {
            Target::Glm(t) => t.grad_batch_into(z, out),
            Target::Quadratic(q) => q.grad_batch_into(z, out),
        }
    }

    pub fn hessian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_point(z)?;
        Ok(match self {
            Target::Glm(t) => t.hessian(z),
            Target::Quadratic(t) => t.hessian(),
        })
    }

    /// `f_n(z)`; for GLMs, `(1/N) log p(z) + log p(y_n | z, x_n)`.
    pub fn component_log_density(&self, n: usize, z: &DVector<f64>) -> Result<f64> {
        self.check_index(n)?;
        self.check_point(z)?;
        Ok(match self {
            Target::Glm(t) => t.component_log_density(n, z),
            Target::Quadratic(t) => t.component_log_density(n, z),
        })
    }

    pub fn component_grad(&self, n: usize, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_index(n)?;
        self.check_point(z)?;
        let mut out = DVector::zeros(self.dim());
        self.component_grad_into(n, z, &mut out);
        Ok(out)
    }

    pub(crate) fn component_grad_into(&self, n: usize, z: &DVector<f64>, out: &mut DVector<f64>) {
        match self {
            Target::Glm(t) => t.component_grad_into(n, z, out),
            Target::Quadratic(t) => t.component_grad_into(n, z, out),
        }
    }

    pub fn component_hessian(&self, n: usize, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_index(n)?;
        self.check_point(z)?;
        Ok(match self {
            Target::Glm(t) => t.component_hessian(n, z),
            Target::Quadratic(t) => t.component_hessian(n),
        })
    }

    fn as_linear(&self) -> Result<&GlmTarget> {
        match self {
            Target::Glm(t) if t.kind() == GlmKind::Linear => Ok(t),
            _ => Err(Error::UnsupportedModel(
                "closed-form posterior exists only for linear regression",
            )),
        }
    }

    pub fn exact_posterior(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.as_linear()?.exact_posterior()
    }

    pub fn log_marginal_likelihood(&self) -> Result<f64> {
        self.as_linear()?.log_marginal_likelihood()
    }

    /// Default stationarity tolerance: `1e-8 sqrt(d)`, scaled up by the
    /// gradient magnitude at the origin so badly scaled data stays solvable.
    pub fn default_tol(&self) -> f64 {
        let origin = DVector::zeros(self.dim());
        let scale = self.grad(&origin).map(|g| g.norm()).unwrap_or(0.0);
        1e-8 * (self.dim() as f64).sqrt() * (1.0 + scale)
    }

    /// Maximizer of `f` (its stationary point) by damped Newton.
    pub fn find_map(&self, tol: f64) -> Result<DVector<f64>> {
        stationary::maximize(
            DVector::zeros(self.dim()),
            tol,
            |z| self.log_density_unchecked(z),
            |z| {
                let mut g = DVector::zeros(z.len());
                self.grad_into(z, &mut g);
                g
            },
            |z| self.hessian(z).expect("dimension checked"),
        )
    }

    /// Maximizer of the component `f_n`.
    pub fn find_component_stationary(&self, n: usize, tol: f64) -> Result<DVector<f64>> {
        self.check_index(n)?;
        stationary::maximize(
            DVector::zeros(self.dim()),
            tol,
            |z| self.component_log_density(n, z).expect("checked"),
            |z| {
                let mut g = DVector::zeros(z.len());
                self.component_grad_into(n, z, &mut g);
                g
            },
            |z| self.component_hessian(n, z).expect("checked"),
        )
    }

    /// Stationary points of every component, in order.
    pub fn component_stationary_points(&self, tol: f64) -> Result<Vec<DVector<f64>>> {
        if let Target::Quadratic(q) = self {
            return Ok(q.components().iter().map(|c| c.zbar.clone()).collect());
        }
        (0..self.num_components())
            .map(|n| self.find_component_stationary(n, tol))
            .collect()
    }

    pub fn elbo_estimate(
        &self,
        w: &Params,
        base: &StandardizedBase,
        n_samples: usize,
        seed: u64,
    ) -> Result<ElboEstimate> {
        check_dim(self.dim(), w.dim())?;
        if n_samples < 2 {
            return Err(Error::InvalidParameter("ELBO estimate needs at least 2 samples".into()));
        }
        let entropy = w.entropy(base)?;
        let d = self.dim();
        let parts = mc::chunks(n_samples, seed, |count, rng| {
            let mut acc = Moments::default();
            let mut u = DVector::zeros(d);
            let mut z = DVector::zeros(d);
            for _ in 0..count {
                base.fill(u.as_mut_slice(), rng);
                w.transform_into(&u, &mut z);
                acc.push(self.log_density_unchecked(&z));
            }
            acc
        });
        let mut total = Moments::default();
        parts.iter().for_each(|p| total.merge(p));
        Ok(ElboEstimate {
            mean: total.mean + entropy,
            se: total.se(),
        })
    }
}
