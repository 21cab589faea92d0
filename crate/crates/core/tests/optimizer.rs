use nalgebra::{DMatrix, DVector};
use varbound::estimators::SamplerLabel;
use varbound::optimizer::{gaussian_kl, run, GradMode, OptConfig};
use varbound::rng::stream;
use varbound::synthetic;
use varbound::targets::{GlmKind, GlmTarget, QuadComponent, QuadraticTarget};
use varbound::{StandardizedBase, Target};

fn linear_target(seed: u64) -> Target {
    GlmTarget::new(GlmKind::Linear, synthetic::linear(40, 3, 0.8, seed).unwrap(), 1.0, 4.0)
        .unwrap()
        .into()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn quadratic_converges_to_the_matching_gaussian() {
    let mut rng = stream(1, 0);
    let m = synthetic::random_psd(3, &mut rng) + DMatrix::identity(3, 3) * 0.5;
    let zbar = synthetic::gaussian_vector(3, &mut rng);
    let t: Target = QuadraticTarget::new(m.clone(), zbar.clone()).unwrap().into();
    let cfg = OptConfig {
        iterations: 400,
        grad_samples: 20_000,
        snapshot_every: 100,
        ..OptConfig::default()
    };
    let trace = run(&t, &StandardizedBase::gaussian(), &cfg).unwrap();
    let w = &trace.last().unwrap().w;
    let cov = &w.c * w.c.transpose();
    let want = m.try_inverse().unwrap();
    assert!((&w.m - &zbar).norm() <= 1e-2, "{}", (&w.m - &zbar).norm());
    assert!((&cov - &want).norm() <= 0.05 * want.norm(), "{cov} vs {want}");
}

#[test]
fn linear_fit_reaches_the_posterior() {
    let t = linear_target(2);
    let (mu, sigma) = t.exact_posterior().unwrap();
    let evidence = t.log_marginal_likelihood().unwrap();
    let cfg = OptConfig {
        iterations: 800,
        grad_samples: 300,
        ..OptConfig::default()
    };
    let trace = run(&t, &StandardizedBase::gaussian(), &cfg).unwrap();
    let kl = gaussian_kl(&trace.last().unwrap().w, &mu, &sigma).unwrap();
    assert!(kl <= 0.1, "KL {kl}");

    assert_eq!(trace[0].iteration, 0);
    assert_eq!(trace[0].elbo_mean, f64::NEG_INFINITY);
    for r in &trace[1..] {
        assert!(r.w.c.determinant().abs() > 0.0);
        assert!(r.elbo_mean <= evidence + 3.0 * r.elbo_se, "{} > {evidence}", r.elbo_mean);
    }
    for pair in trace.windows(2) {
        assert!(pair[1].iteration > pair[0].iteration);
    }
    // windowed medians of the ELBO never fall by more than their noise
    let elbos: Vec<f64> = trace[1..].iter().map(|r| r.elbo_mean).collect();
    let se = trace.last().unwrap().elbo_se;
    let medians: Vec<f64> = elbos.chunks(10).map(|c| median(&mut c.to_vec())).collect();
    for pair in medians.windows(2) {
        assert!(pair[1] >= pair[0] - 3.0 * se, "{medians:?}");
    }
}

#[test]
fn reruns_are_bitwise_identical() {
    let t = GlmTarget::new(GlmKind::Logistic, synthetic::logistic(30, 3, 10.0, 3).unwrap(), 1.0, 4.0)
        .unwrap()
        .into();
    for mode in [GradMode::Batch, GradMode::Subsampled(SamplerLabel::OptMatrix)] {
        let cfg = OptConfig {
            iterations: 60,
            grad_samples: 50,
            snapshot_every: 10,
            mode,
            seed: 17,
            ..OptConfig::default()
        };
        let a = run(&t, &StandardizedBase::uniform(), &cfg).unwrap();
        let b = run(&t, &StandardizedBase::uniform(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 7);
        let c = run(&t, &StandardizedBase::uniform(), &OptConfig { seed: 18, ..cfg }).unwrap();
        assert_ne!(a.last(), c.last());
    }
}

#[test]
fn subsampled_modes_converge_on_linear() {
    let t = linear_target(4);
    let (mu, sigma) = t.exact_posterior().unwrap();
    for label in SamplerLabel::ALL {
        let cfg = OptConfig {
            iterations: 1500,
            grad_samples: 500,
            step_size: Some(0.5 / varbound::smoothness::SmoothnessSpec::derive(&t).unwrap().full_scalar),
            mode: GradMode::Subsampled(label),
            ..OptConfig::default()
        };
        let trace = run(&t, &StandardizedBase::gaussian(), &cfg).unwrap();
        let kl = gaussian_kl(&trace.last().unwrap().w, &mu, &sigma).unwrap();
        assert!(kl <= 0.1, "{label}: KL {kl}");
    }
}

#[test]
fn step_count_and_snapshot_schedule() {
    let a = QuadComponent::new(DMatrix::identity(1, 1), DVector::from_vec(vec![1.0])).unwrap();
    let t: Target = QuadraticTarget::from_components(vec![a]).unwrap().into();
    let cfg = OptConfig {
        iterations: 25,
        grad_samples: 1,
        snapshot_every: 10,
        ..OptConfig::default()
    };
    let trace = run(&t, &StandardizedBase::gaussian(), &cfg).unwrap();
    let its: Vec<usize> = trace.iter().map(|r| r.iteration).collect();
    assert_eq!(its, vec![0, 10, 20, 25]);
}
