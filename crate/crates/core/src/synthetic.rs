//! Seeded synthetic datasets and random parameters.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::locscale::Params;
use crate::rng::stream;
use crate::targets::Dataset;

pub fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `A A^T / d` for Gaussian `A`: symmetric PSD, almost surely full rank.
pub fn random_psd<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let a = gaussian_matrix(d, d, rng);
    let m = &a * a.transpose() / d as f64;
    (&m + m.transpose()) * 0.5
}

/// Gaussian `m` and `C` with entries scaled by `scale`.
pub fn random_params<R: Rng + ?Sized>(d: usize, scale: f64, rng: &mut R) -> Params {
    Params {
        m: gaussian_vector(d, rng),
        c: gaussian_matrix(d, d, rng) * scale,
    }
}

/// `y = x . z* + noise_sd * eps` with standard normal features and weights.
pub fn linear(n: usize, d: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    let mut rng = stream(seed, 0);
    let truth = gaussian_vector(d, &mut rng);
    let x = gaussian_matrix(n, d, &mut rng);
    let noise = gaussian_vector(n, &mut rng) * noise_sd;
    let y = &x * truth + noise;
    Dataset::new(x, y)
}

/// Bernoulli labels in {-1, +1} from a logistic model. Row norms are
/// log-uniform on `[1, spread]`, so `spread = 100` gives norms spanning two
/// orders of magnitude.
pub fn logistic(n: usize, d: usize, spread: f64, seed: u64) -> Result<Dataset> {
    let mut rng = stream(seed, 0);
    let truth = gaussian_vector(d, &mut rng) / (d as f64).sqrt();
    let mut x = DMatrix::zeros(n, d);
    let mut y = DVector::zeros(n);
    let log_spread = spread.max(1.0).ln();
    for i in 0..n {
        let dir = gaussian_vector(d, &mut rng).normalize();
        let norm = (rng.random::<f64>() * log_spread).exp();
        let row = dir * norm;
        let p = crate::targets::sigmoid(row.dot(&truth));
        y[i] = if rng.random::<f64>() < p { 1.0 } else { -1.0 };
        x.row_mut(i).copy_from(&row.transpose());
    }
    Dataset::new(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_shaped() {
        let a = linear(20, 3, 0.5, 7).unwrap();
        assert_eq!((a.len(), a.dim()), (20, 3));
        assert_eq!(a, linear(20, 3, 0.5, 7).unwrap());
        let b = logistic(200, 4, 100.0, 1).unwrap();
        assert!(b.is_binary());
        let norms: Vec<f64> = (0..b.len()).map(|i| b.x().row(i).norm()).collect();
        let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = norms.iter().copied().fold(0.0, f64::max);
        assert!(lo >= 1.0 - 1e-12 && hi <= 100.0 + 1e-9 && hi / lo > 30.0);
    }

    #[test]
    fn random_psd_is_symmetric_psd() {
        let mut rng = stream(3, 0);
        let m = random_psd(5, &mut rng);
        crate::linalg::check_symmetric_psd(&m, "m").unwrap();
    }
}
