//! Scalar and matrix smoothness certificates.
//!
//! `f` is `M`-matrix-smooth when `||grad f(y) - grad f(z)|| <= ||M (y - z)||`
//! for all `y, z`. For a GLM with an isotropic Gaussian prior,
//! `M = I / sigma2 + c sum_n x_n x_n^T` with `c` the curvature bound of the
//! link, and each component gets `I / (N sigma2) + c x_n x_n^T`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Result};
use crate::linalg::spectral_norm;
use crate::rng::{derive_seed, stream, tags};
use crate::targets::Target;

/// A symmetric PSD smoothness matrix, stored densely or as
/// `alpha I + c x x^T` (the GLM component shape, O(d) storage).
#[derive(Clone, Debug, PartialEq)]
pub enum SmoothMatrix {
    Dense(DMatrix<f64>),
    IdentityPlusRankOne { alpha: f64, c: f64, x: DVector<f64> },
}

impl SmoothMatrix {
    pub fn dim(&self) -> usize {
        match self {
            SmoothMatrix::Dense(m) => m.nrows(),
            SmoothMatrix::IdentityPlusRankOne { x, .. } => x.len(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            SmoothMatrix::Dense(m) => m.clone(),
            SmoothMatrix::IdentityPlusRankOne { alpha, c, x } => {
                let mut m = x * x.transpose() * *c;
                for i in 0..x.len() {
                    m[(i, i)] += alpha;
                }
                m
            }
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            SmoothMatrix::Dense(m) => m * v,
            SmoothMatrix::IdentityPlusRankOne { alpha, c, x } => v * *alpha + x * (c * x.dot(v)),
        }
    }

    /// `||M A||_F^2`.
    pub fn product_sq_frobenius(&self, a: &DMatrix<f64>) -> f64 {
        match self {
            SmoothMatrix::Dense(m) => (m * a).norm_squared(),
            SmoothMatrix::IdentityPlusRankOne { alpha, c, x } => {
                // (alpha A + c x (x^T A)), column by column
                let xt_a = a.tr_mul(x);
                let mut acc = 0.0;
                for j in 0..a.ncols() {
                    let s = c * xt_a[j];
                    for i in 0..a.nrows() {
                        let v = alpha * a[(i, j)] + s * x[i];
                        acc += v * v;
                    }
                }
                acc
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSmoothness {
    pub matrix: SmoothMatrix,
    pub scalar: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessSpec {
    pub full_matrix: DMatrix<f64>,
    pub full_scalar: f64,
    pub components: Vec<ComponentSmoothness>,
}

impl SmoothnessSpec {
    /// Certificates for a GLM (from the link curvature bound) or a
    /// quadratic (its own curvature, exactly).
    pub fn derive(target: &Target) -> Result<Self> {
        match target {
            Target::Glm(t) => {
                let d = t.dim();
                let n = t.len();
                let c = t.curvature_bound();
                let x = t.data().x();
                let mut full = x.tr_mul(x) * c;
                for i in 0..d {
                    full[(i, i)] += 1.0 / t.sigma2();
                }
                let alpha = 1.0 / (n as f64 * t.sigma2());
                let components = (0..n)
                    .map(|k| {
                        let xn = x.row(k).transpose();
                        let scalar = alpha + c * xn.norm_squared();
                        ComponentSmoothness {
                            matrix: SmoothMatrix::IdentityPlusRankOne { alpha, c, x: xn },
                            scalar,
                        }
                    })
                    .collect();
                Ok(Self {
                    full_scalar: spectral_norm(&full),
                    full_matrix: full,
                    components,
                })
            }
            Target::Quadratic(q) => {
                let components = q
                    .components()
                    .iter()
                    .map(|c| ComponentSmoothness {
                        scalar: spectral_norm(&c.m),
                        matrix: SmoothMatrix::Dense(c.m.clone()),
                    })
                    .collect();
                Ok(Self {
                    full_scalar: spectral_norm(q.matrix()),
                    full_matrix: q.matrix().clone(),
                    components,
                })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.full_matrix.nrows()
    }
}

/// Outcome of an empirical smoothness check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothnessReport {
    pub trials: usize,
    pub violations: usize,
    /// max over trials of `||grad f(y) - grad f(z)|| / ||M (y - z)||`.
    pub max_ratio: f64,
}

/// Relative slack before a trial counts as a violation.
pub const VIOLATION_SLACK: f64 = 1e-9;

/// Samples `trials` pairs uniformly in the ball of `radius` around the MAP
/// and tests `||grad f(y) - grad f(z)|| <= ||M (y - z)||`.
pub fn verify_matrix_smoothness(
    target: &Target,
    m: &DMatrix<f64>,
    trials: usize,
    radius: f64,
    seed: u64,
) -> Result<SmoothnessReport> {
    let d = target.dim();
    check_dim(d, m.nrows())?;
    check_dim(d, m.ncols())?;
    let center = match target.find_map(target.default_tol()) {
        Ok(z) => z,
        Err(crate::Error::NonConvergence { best, .. }) => DVector::from_vec(best),
        Err(e) => return Err(e),
    };
    let mut rng = stream(derive_seed(seed, tags::VERIFY, 0), 0);
    let ball_point = |rng: &mut crate::rng::Stream| {
        let dir = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
        let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
        &center + dir.normalize() * r
    };
    let mut report = SmoothnessReport {
        trials,
        violations: 0,
        max_ratio: 0.0,
    };
    for _ in 0..trials {
        let y = ball_point(&mut rng);
        let z = ball_point(&mut rng);
        let lhs = (target.grad(&y)? - target.grad(&z)?).norm();
        let rhs = (m * (&y - &z)).norm();
        if lhs > rhs * (1.0 + VIOLATION_SLACK) {
            report.violations += 1;
        }
        let ratio = if lhs == 0.0 && rhs == 0.0 { 0.0 } else { lhs / rhs };
        report.max_ratio = report.max_ratio.max(ratio);
    }
    Ok(report)
}
