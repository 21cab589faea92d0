//! Invariant battery behind `varbound selftest`.
//!
//! Each check builds its own seeded instance and compares an implementation
//! result against an independent closed form or a Monte Carlo measurement
//! with a standard-error tolerance.

use nalgebra::DMatrix;

use crate::base::StandardizedBase;
use crate::error::Result;
use crate::estimators::{
    empirical_esn, esn_bound_friendly, esn_bound_matrix, esn_bound_scalar, esn_bound_subsampled,
    rp_gradient, variance_lower_bound, Estimator, Mode, SamplerDist, SamplerLabel,
};
use crate::locscale::Params;
use crate::mc::{self, Moments};
use crate::rng::{derive_seed, stream};
use crate::smoothness::{verify_matrix_smoothness, SmoothnessSpec};
use crate::synthetic;
use crate::targets::{GlmKind, GlmTarget, QuadComponent, QuadraticTarget, Target};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }

    fn from_result(name: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Monte Carlo draws per statistical check.
    pub samples: usize,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 200_000,
        }
    }
}

const Z: f64 = 4.0;

fn glm(kind: GlmKind, n: usize, d: usize, seed: u64) -> Result<Target> {
    let data = match kind {
        GlmKind::Linear => synthetic::linear(n, d, 0.5, seed)?,
        GlmKind::Logistic => synthetic::logistic(n, d, 10.0, seed)?,
    };
    Ok(GlmTarget::new(kind, data, 1.0, 4.0)?.into())
}

fn quadratic_components(n: usize, d: usize, seed: u64) -> Result<Target> {
    let mut rng = stream(seed, 0);
    let comps = (0..n)
        .map(|_| {
            let m = synthetic::random_psd(d, &mut rng);
            QuadComponent::new(m, synthetic::gaussian_vector(d, &mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QuadraticTarget::from_components(comps)?.into())
}

fn grad_norm_identity(seed: u64) -> Result<(bool, String)> {
    let mut rng = stream(seed, 0);
    let targets = [
        glm(GlmKind::Linear, 20, 3, seed)?,
        glm(GlmKind::Logistic, 20, 3, seed)?,
        quadratic_components(1, 3, seed)?,
    ];
    let base = StandardizedBase::gaussian();
    let mut worst: f64 = 0.0;
    for t in &targets {
        for _ in 0..30 {
            let w = synthetic::random_params(3, 1.0, &mut rng);
            let u = base.sample(3, &mut rng);
            let g = rp_gradient(t, &w, &u)?;
            let z = w.transform(&u)?;
            let want = t.grad(&z)?.norm_squared() * (1.0 + u.norm_squared());
            if want > 0.0 {
                worst = worst.max((g.sq_norm() - want).abs() / want);
            }
        }
    }
    Ok((worst <= 1e-12, format!("max relative error {worst:.3e}")))
}

fn transform_moment(base: StandardizedBase, cfg: &SelftestConfig) -> Result<(bool, String)> {
    let d = 5;
    let mut rng = stream(cfg.seed, 1);
    let w = synthetic::random_params(d, 0.7, &mut rng);
    let zbar = synthetic::gaussian_vector(d, &mut rng);
    let parts = mc::chunks(cfg.samples, derive_seed(cfg.seed, 10, 0), |count, rng| {
        let mut acc = Moments::default();
        for _ in 0..count {
            let u = base.sample(d, rng);
            let z = &w.c * &u + &w.m;
            acc.push((z - &zbar).norm_squared() * (1.0 + u.norm_squared()));
        }
        acc
    });
    let mut acc = Moments::default();
    parts.iter().for_each(|p| acc.merge(p));
    let (loc, scale) = w.sq_distance(&zbar)?;
    let want = (d as f64 + 1.0) * loc + (d as f64 + base.kurtosis()) * scale;
    let z = (acc.mean - want) / acc.se();
    Ok((z.abs() <= Z, format!("mean {:.6} vs {want:.6} ({z:+.2} SE)", acc.mean)))
}

fn within(emp: f64, se: f64, want: f64) -> (bool, String) {
    let z = (emp - want) / se;
    (z.abs() <= Z, format!("empirical {emp:.6} vs {want:.6} ({z:+.2} SE)"))
}

fn tightness_matrix(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let d = 5;
    let t = quadratic_components(1, d, cfg.seed)?;
    let Target::Quadratic(q) = &t else { unreachable!() };
    let mut rng = stream(cfg.seed, 2);
    let w = synthetic::random_params(d, 0.5, &mut rng);
    let base = StandardizedBase::gaussian();
    let est = empirical_esn(&t, &w, &base, Estimator::Batch, cfg.samples, cfg.seed)?;
    let want = esn_bound_matrix(q.matrix(), &w, q.zbar(), base.kurtosis())?;
    Ok(within(est.esn_mean, est.esn_se, want))
}

fn tightness_subsampled(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let d = 3;
    let t = quadratic_components(6, d, cfg.seed)?;
    let spec = SmoothnessSpec::derive(&t)?;
    let zbars = t.component_stationary_points(0.0)?;
    let mut rng = stream(cfg.seed, 3);
    let w = synthetic::random_params(d, 0.5, &mut rng);
    let base = StandardizedBase::uniform();
    let kappa = base.kurtosis();
    let mut ok = true;
    let mut details = Vec::new();
    for label in [SamplerLabel::Uniform, SamplerLabel::OptMatrix] {
        let pi = SamplerDist::by_label(label, &spec, &zbars, &w, kappa)?;
        let est = empirical_esn(&t, &w, &base, Estimator::Subsampled(&pi), cfg.samples, cfg.seed)?;
        let want = esn_bound_subsampled(&spec, &zbars, &pi, &w, kappa, Mode::Matrix)?;
        let (pass, detail) = within(est.esn_mean, est.esn_se, want);
        ok &= pass;
        details.push(format!("{label}: {detail}"));
    }
    Ok((ok, details.join("; ")))
}

/// `||mean g - grad l||^2` against its expectation `tr V / n`; even a
/// single dominant coordinate exceeds 25x only with probability ~1e-6.
fn unbiasedness(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let d = 3;
    let t = quadratic_components(6, d, cfg.seed)?;
    let Target::Quadratic(q) = &t else { unreachable!() };
    let spec = SmoothnessSpec::derive(&t)?;
    let zbars = t.component_stationary_points(0.0)?;
    let mut rng = stream(cfg.seed, 4);
    let w = synthetic::random_params(d, 0.5, &mut rng);
    let base = StandardizedBase::gaussian();
    let want_m = -(q.matrix() * (&w.m - q.zbar()));
    let want_c = -(q.matrix() * &w.c);
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for label in SamplerLabel::ALL {
        let pi = SamplerDist::by_label(label, &spec, &zbars, &w, base.kurtosis())?;
        let est = empirical_esn(&t, &w, &base, Estimator::Subsampled(&pi), cfg.samples, cfg.seed)?;
        let err = (&est.mean_grad.gm - &want_m).norm_squared()
            + (&est.mean_grad.gc - &want_c).norm_squared();
        let expected = est.trace_var / cfg.samples as f64;
        let ratio = err / expected;
        worst = worst.max(ratio);
        ok &= ratio <= 25.0;
    }
    Ok((ok, format!("max squared error / (tr V / n) = {worst:.3}")))
}

fn variance_sandwich(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let d = 3;
    let t = quadratic_components(6, d, cfg.seed)?;
    let spec = SmoothnessSpec::derive(&t)?;
    let zbars = t.component_stationary_points(0.0)?;
    let mut rng = stream(cfg.seed, 5);
    let w = synthetic::random_params(d, 0.5, &mut rng);
    let base = StandardizedBase::gaussian();
    let kappa = base.kurtosis();
    let pi = SamplerDist::uniform(zbars.len())?;
    let est = empirical_esn(&t, &w, &base, Estimator::Subsampled(&pi), cfg.samples, cfg.seed)?;
    let lo = variance_lower_bound(&spec, &zbars, &pi, &w, kappa)?;
    let hi = esn_bound_subsampled(&spec, &zbars, &pi, &w, kappa, Mode::Matrix)?;
    let slack = Z * est.esn_se;
    let ok = est.trace_var >= lo - slack && est.trace_var <= hi + slack;
    Ok((ok, format!("{lo:.4} <= tr V {:.4} <= {hi:.4}", est.trace_var)))
}

fn smoothness_logistic(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let t = glm(GlmKind::Logistic, 100, 5, cfg.seed)?;
    let spec = SmoothnessSpec::derive(&t)?;
    let r = verify_matrix_smoothness(&t, &spec.full_matrix, 2000, 10.0, cfg.seed)?;
    Ok((
        r.violations == 0,
        format!("{} violations in {} pairs, max ratio {:.6}", r.violations, r.trials, r.max_ratio),
    ))
}

fn smoothness_linear_exact(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let t = glm(GlmKind::Linear, 100, 5, cfg.seed)?;
    let spec = SmoothnessSpec::derive(&t)?;
    let r = verify_matrix_smoothness(&t, &spec.full_matrix, 2000, 10.0, cfg.seed)?;
    let ok = r.violations == 0 && (r.max_ratio - 1.0).abs() <= 1e-9;
    Ok((ok, format!("max ratio {:.12}", r.max_ratio)))
}

fn bound_chain(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let mut rng = stream(cfg.seed, 6);
    let base = StandardizedBase::gaussian();
    let kappa = base.kurtosis();
    let mut ok = true;
    let mut detail = String::new();
    for kind in [GlmKind::Linear, GlmKind::Logistic] {
        let t = glm(kind, 50, 4, cfg.seed)?;
        let spec = SmoothnessSpec::derive(&t)?;
        let zbar = t.find_map(t.default_tol())?;
        let w = Params::new(&zbar + synthetic::gaussian_vector(4, &mut rng) * 0.1, DMatrix::identity(4, 4) * 0.1)?;
        let est = empirical_esn(&t, &w, &base, Estimator::Batch, cfg.samples / 4, cfg.seed)?;
        let matrix = esn_bound_matrix(&spec.full_matrix, &w, &zbar, kappa)?;
        let scalar = esn_bound_scalar(spec.full_scalar, &w, &zbar, kappa)?;
        let friendly = esn_bound_friendly(spec.full_scalar, &w, &zbar, kappa)?;
        ok &= est.esn_mean - Z * est.esn_se <= matrix
            && matrix <= scalar * (1.0 + 1e-12)
            && scalar <= friendly * (1.0 + 1e-12);
        detail.push_str(&format!(
            "{}: {:.4} <= {matrix:.4} <= {scalar:.4} <= {friendly:.4}; ",
            kind.name(),
            est.esn_mean
        ));
    }
    Ok((ok, detail.trim_end_matches("; ").to_string()))
}

fn linear_evidence(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let t = glm(GlmKind::Linear, 50, 5, cfg.seed)?;
    let (mu, sigma) = t.exact_posterior()?;
    let c = sigma.cholesky().ok_or(crate::Error::Singular)?.l();
    let w = Params::new(mu, c)?;
    let elbo = t.elbo_estimate(&w, &StandardizedBase::gaussian(), cfg.samples / 4, cfg.seed)?;
    let want = t.log_marginal_likelihood()?;
    let z = (elbo.mean - want) / elbo.se;
    Ok((z.abs() <= 3.0, format!("ELBO {:.6} vs log evidence {want:.6} ({z:+.2} SE)", elbo.mean)))
}

fn point_mass_esn_zero(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let t = quadratic_components(1, 3, cfg.seed)?;
    let Target::Quadratic(q) = &t else { unreachable!() };
    let w = Params::point_mass(q.zbar().clone());
    let est = empirical_esn(&t, &w, &StandardizedBase::gaussian(), Estimator::Batch, 1000, cfg.seed)?;
    Ok((est.esn_mean == 0.0, format!("esn {:e}", est.esn_mean)))
}

pub fn run(cfg: &SelftestConfig) -> Vec<Check> {
    let mut out = vec![Check::from_result("grad_norm_identity", grad_norm_identity(cfg.seed))];
    for (name, base) in [
        ("transform_moment_gaussian", StandardizedBase::gaussian()),
        ("transform_moment_uniform", StandardizedBase::uniform()),
        ("transform_moment_student_t", StandardizedBase::student_t(12.0).expect("valid dof")),
    ] {
        out.push(Check::from_result(name, transform_moment(base, cfg)));
    }
    out.push(Check::from_result("tightness_matrix", tightness_matrix(cfg)));
    out.push(Check::from_result("tightness_subsampled", tightness_subsampled(cfg)));
    out.push(Check::from_result("subsampled_unbiased", unbiasedness(cfg)));
    out.push(Check::from_result("variance_sandwich", variance_sandwich(cfg)));
    out.push(Check::from_result("smoothness_logistic", smoothness_logistic(cfg)));
    out.push(Check::from_result("smoothness_linear_exact", smoothness_linear_exact(cfg)));
    out.push(Check::from_result("bound_chain", bound_chain(cfg)));
    out.push(Check::from_result("linear_evidence", linear_evidence(cfg)));
    out.push(Check::from_result("point_mass_esn_zero", point_mass_esn_zero(cfg)));
    out
}
