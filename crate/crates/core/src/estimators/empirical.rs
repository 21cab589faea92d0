use nalgebra::{DMatrix, DVector};

use super::sampler::SamplerDist;
use super::GradSample;
use crate::base::StandardizedBase;
use crate::error::{check_dim, Error, Result};
use crate::locscale::Params;
use crate::mc::{self, Moments};
use crate::rng::Stream;
use crate::targets::Target;

/// Full-data gradients, or one component `n ~ pi` per draw.
#[derive(Clone, Copy, Debug)]
pub enum Estimator<'a> {
    Batch,
    Subsampled(&'a SamplerDist),
}

#[derive(Clone, Debug)]
pub struct EsnEstimate {
    pub n_samples: usize,
    /// Sample mean of `||g||^2`.
    pub esn_mean: f64,
    pub esn_se: f64,
    /// Plug-in `tr V[g] = esn_mean - ||mean g||^2`.
    pub trace_var: f64,
    pub mean_grad: GradSample,
}

struct Partial {
    sq: Moments,
    sum_m: DVector<f64>,
    sum_c: DMatrix<f64>,
}

/// Draws per matrix-product block in batch mode.
const BLOCK: usize = 64;

impl Partial {
    fn new(d: usize) -> Self {
        Self {
            sq: Moments::default(),
            sum_m: DVector::zeros(d),
            sum_c: DMatrix::zeros(d, d),
        }
    }
}

/// `||gm||^2 + ||gamma u^T||_F^2`, entry by entry.
fn sq_norm_explicit<'a>(gamma: impl Iterator<Item = &'a f64> + Clone, u: &[f64]) -> f64 {
    let mut sq: f64 = gamma.clone().map(|g| g * g).sum();
    for &uj in u {
        for g in gamma.clone() {
            let e = g * uj;
            sq += e * e;
        }
    }
    sq
}

fn batch_chunk(
    target: &Target,
    w: &Params,
    base: &StandardizedBase,
    count: usize,
    rng: &mut Stream,
) -> Partial {
    let d = w.dim();
    let mut part = Partial::new(d);
    let mut done = 0;
    while done < count {
        let b = BLOCK.min(count - done);
        let mut u = DMatrix::zeros(d, b);
        for k in 0..b {
            base.fill(&mut u.as_mut_slice()[k * d..(k + 1) * d], rng);
        }
        let mut z = &w.c * &u;
        for mut col in z.column_iter_mut() {
            col += &w.m;
        }
        let mut g = DMatrix::zeros(d, b);
        target.grad_batch_into(&z, &mut g);
        for k in 0..b {
            let gamma = g.column(k);
            part.sq.push(sq_norm_explicit(gamma.iter(), &u.as_slice()[k * d..(k + 1) * d]));
            part.sum_m += gamma;
        }
        part.sum_c.gemm(1.0, &g, &u.transpose(), 1.0);
        done += b;
    }
    part
}

fn subsampled_chunk(
    target: &Target,
    w: &Params,
    base: &StandardizedBase,
    pi: &SamplerDist,
    count: usize,
    rng: &mut Stream,
) -> Partial {
    let d = w.dim();
    let mut part = Partial::new(d);
    let mut u = DVector::zeros(d);
    let mut z = DVector::zeros(d);
    let mut gamma = DVector::zeros(d);
    for _ in 0..count {
        base.fill(u.as_mut_slice(), rng);
        w.transform_into(&u, &mut z);
        let n = pi.sample(rng);
        target.component_grad_into(n, &z, &mut gamma);
        gamma /= pi.weight(n);
        part.sq.push(sq_norm_explicit(gamma.iter(), u.as_slice()));
        part.sum_m += &gamma;
        part.sum_c.ger(1.0, &gamma, &u, 1.0);
    }
    part
}

/// Monte Carlo measurement of `E ||g||^2` over fresh `(u, n)` draws.
/// Bit-reproducible for a fixed seed, independent of thread count.
pub fn empirical_esn(
    target: &Target,
    w: &Params,
    base: &StandardizedBase,
    estimator: Estimator<'_>,
    n_samples: usize,
    seed: u64,
) -> Result<EsnEstimate> {
    let d = target.dim();
    check_dim(d, w.dim())?;
    if n_samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 Monte Carlo samples".into()));
    }
    if let Estimator::Subsampled(pi) = estimator {
        check_dim(target.num_components(), pi.len())?;
    }
    let parts = mc::chunks(n_samples, seed, |count, rng| match estimator {
        Estimator::Batch => batch_chunk(target, w, base, count, rng),
        Estimator::Subsampled(pi) => subsampled_chunk(target, w, base, pi, count, rng),
    });

    let mut sq = Moments::default();
    let mut sum_m = DVector::zeros(d);
    let mut sum_c = DMatrix::zeros(d, d);
    for p in &parts {
        sq.merge(&p.sq);
        sum_m += &p.sum_m;
        sum_c += &p.sum_c;
    }
    let n = n_samples as f64;
    let mean_grad = GradSample {
        gm: sum_m / n,
        gc: sum_c / n,
    };
    Ok(EsnEstimate {
        n_samples,
        esn_mean: sq.mean,
        esn_se: sq.se(),
        trace_var: sq.mean - mean_grad.sq_norm(),
        mean_grad,
    })
}
