//! Reference formulas written directly from the model definitions, kept
//! separate from the library's implementations.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Gradient of `log N(z; 0, sigma2 I) + sum_n log N(y_n; x_n.z, rho2)`.
pub fn linear_grad(x: &DMatrix<f64>, y: &DVector<f64>, sigma2: f64, rho2: f64, z: &DVector<f64>) -> DVector<f64> {
    let mut g = -z / sigma2;
    for n in 0..x.nrows() {
        let xn = x.row(n).transpose();
        g += &xn * ((y[n] - xn.dot(z)) / rho2);
    }
    g
}

/// Gradient of `log N(z; 0, sigma2 I) + sum_n log sigmoid(y_n x_n.z)`.
pub fn logistic_grad(x: &DMatrix<f64>, y: &DVector<f64>, sigma2: f64, z: &DVector<f64>) -> DVector<f64> {
    let mut g = -z / sigma2;
    for n in 0..x.nrows() {
        let xn = x.row(n).transpose();
        g += &xn * (y[n] * sigmoid(-y[n] * xn.dot(z)));
    }
    g
}

/// Gradient of `-1/2 sum_n (z - zbar_n)^T M_n (z - zbar_n)`.
pub fn quadratic_grad(ms: &[DMatrix<f64>], zbars: &[DVector<f64>], z: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(z.len());
    for (m, zb) in ms.iter().zip(zbars) {
        g -= m * (z - zb);
    }
    g
}

fn chol_logdet(a: &DMatrix<f64>) -> (nalgebra::Cholesky<f64, nalgebra::Dyn>, f64) {
    let c = a.clone().cholesky().expect("positive definite");
    let ld = 2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    (c, ld)
}

/// `log N(y; 0, rho2 I + sigma2 X X^T)`: the marginal likelihood of the
/// linear model with the weights integrated out, in data space.
pub fn linear_log_evidence(x: &DMatrix<f64>, y: &DVector<f64>, sigma2: f64, rho2: f64) -> f64 {
    let n = x.nrows();
    let k = DMatrix::identity(n, n) * rho2 + x * x.transpose() * sigma2;
    let (c, ld) = chol_logdet(&k);
    let quad = y.dot(&c.solve(y));
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + ld + quad)
}

/// Posterior of the linear model by Gaussian conditioning in data space:
/// `mu = sigma2 X^T K^-1 y`, `Sigma = sigma2 I - sigma2^2 X^T K^-1 X`.
pub fn linear_posterior(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    sigma2: f64,
    rho2: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let (n, d) = x.shape();
    let k = DMatrix::identity(n, n) * rho2 + x * x.transpose() * sigma2;
    let (c, _) = chol_logdet(&k);
    let mu = x.transpose() * c.solve(y) * sigma2;
    let sigma = DMatrix::identity(d, d) * sigma2 - x.transpose() * c.solve(x) * (sigma2 * sigma2);
    (mu, (&sigma + sigma.transpose()) * 0.5)
}

/// `KL(N(mu0, s0) || N(mu1, s1))`.
pub fn gaussian_kl(mu0: &DVector<f64>, s0: &DMatrix<f64>, mu1: &DVector<f64>, s1: &DMatrix<f64>) -> f64 {
    let d = mu0.len() as f64;
    let (c1, ld1) = chol_logdet(s1);
    let (_, ld0) = chol_logdet(s0);
    let diff = mu1 - mu0;
    0.5 * (c1.solve(s0).trace() + diff.dot(&c1.solve(&diff)) - d + ld1 - ld0)
}
