//! Standardized base distributions.
//!
//! A base `s` has iid components with mean 0, variance 1 and third moment 0.
//! The gradient-norm bounds depend on `s` only through its fourth moment
//! (the kurtosis), which is cached on construction.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use statrs::function::{beta::ln_beta, gamma::digamma};

use crate::error::{Error, Result};

/// Minimum margin above 4 degrees of freedom for the Student-t base.
pub const STUDENT_T_DOF_MARGIN: f64 = 1e-6;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BaseKind {
    Gaussian,
    Uniform,
    StudentT { dof: f64 },
}

#[derive(Clone, Debug)]
pub struct StandardizedBase {
    kind: BaseKind,
    kurtosis: f64,
    t_dist: Option<StudentT<f64>>,
}

impl Default for StandardizedBase {
    fn default() -> Self {
        Self::gaussian()
    }
}

impl StandardizedBase {
    pub fn gaussian() -> Self {
        Self {
            kind: BaseKind::Gaussian,
            kurtosis: 3.0,
            t_dist: None,
        }
    }

    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    pub fn uniform() -> Self {
        Self {
            kind: BaseKind::Uniform,
            kurtosis: 1.8,
            t_dist: None,
        }
    }

    /// Student-t with `dof` degrees of freedom, rescaled to unit variance.
    /// Requires `dof > 4 + 1e-6` so the fourth moment is finite and tame.
    pub fn student_t(dof: f64) -> Result<Self> {
        if !dof.is_finite() || dof <= 4.0 + STUDENT_T_DOF_MARGIN {
            return Err(Error::InvalidParameter(format!(
                "student-t base needs dof > 4 (got {dof})"
            )));
        }
        let t_dist = StudentT::new(dof)
            .map_err(|e| Error::InvalidParameter(format!("student-t: {e}")))?;
        Ok(Self {
            kind: BaseKind::StudentT { dof },
            kurtosis: 3.0 * (dof - 2.0) / (dof - 4.0),
            t_dist: Some(t_dist),
        })
    }

    pub fn kind(&self) -> BaseKind {
        self.kind
    }

    /// `E[u_1^4]`.
    pub fn kurtosis(&self) -> f64 {
        self.kurtosis
    }

    pub fn sample<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> DVector<f64> {
        let mut u = DVector::zeros(d);
        self.fill(u.as_mut_slice(), rng);
        u
    }

    /// Overwrites `out` with iid standardized draws.
    pub fn fill<R: Rng + ?Sized>(&self, out: &mut [f64], rng: &mut R) {
        match self.kind {
            BaseKind::Gaussian => {
                for x in out.iter_mut() {
                    *x = StandardNormal.sample(rng);
                }
            }
            BaseKind::Uniform => {
                for x in out.iter_mut() {
                    *x = SQRT_3 * (2.0 * rng.random::<f64>() - 1.0);
                }
            }
            BaseKind::StudentT { dof } => {
                let t = self.t_dist.as_ref().expect("student-t base carries its sampler");
                let scale = ((dof - 2.0) / dof).sqrt();
                for x in out.iter_mut() {
                    *x = scale * t.sample(rng);
                }
            }
        }
    }

    /// Differential entropy (nats) of `d` iid standardized components.
    pub fn entropy(&self, d: usize) -> f64 {
        let one = match self.kind {
            BaseKind::Gaussian => 0.5 * (2.0 * PI * E).ln(),
            BaseKind::Uniform => (2.0 * SQRT_3).ln(),
            BaseKind::StudentT { dof } => {
                let h = 0.5 * (dof + 1.0) * (digamma(0.5 * (dof + 1.0)) - digamma(0.5 * dof))
                    + 0.5 * dof.ln()
                    + ln_beta(0.5 * dof, 0.5);
                h + 0.5 * ((dof - 2.0) / dof).ln()
            }
        };
        one * d as f64
    }
}

impl fmt::Display for StandardizedBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            BaseKind::Gaussian => write!(f, "gaussian"),
            BaseKind::Uniform => write!(f, "uniform"),
            BaseKind::StudentT { dof } => write!(f, "student-t:{dof}"),
        }
    }
}

impl FromStr for StandardizedBase {
    type Err = Error;

    /// Accepts `gaussian`, `uniform` or `student-t:<dof>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "gaussian" => Ok(Self::gaussian()),
            "uniform" => Ok(Self::uniform()),
            _ => match s.strip_prefix("student-t:") {
                Some(dof) => {
                    let dof: f64 = dof.trim().parse().map_err(|_| {
                        Error::InvalidParameter(format!("bad student-t dof in {s:?}"))
                    })?;
                    Self::student_t(dof)
                }
                None => Err(Error::InvalidParameter(format!("unknown base {s:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn all_bases() -> Vec<StandardizedBase> {
        vec![
            StandardizedBase::gaussian(),
            StandardizedBase::uniform(),
            StandardizedBase::student_t(8.0).unwrap(),
        ]
    }

    #[test]
    fn kurtosis_values() {
        assert_eq!(StandardizedBase::gaussian().kurtosis(), 3.0);
        assert!((StandardizedBase::uniform().kurtosis() - 1.8).abs() < 1e-15);
        assert!((StandardizedBase::student_t(8.0).unwrap().kurtosis() - 4.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_kurtosis_by_quadrature() {
        // midpoint rule for the integral of t^4 / (2 sqrt3) over [-sqrt3, sqrt3]
        let n = 200_000;
        let h = 2.0 * SQRT_3 / n as f64;
        let integral: f64 = (0..n)
            .map(|i| {
                let t = -SQRT_3 + (i as f64 + 0.5) * h;
                t.powi(4) * h
            })
            .sum::<f64>()
            / (2.0 * SQRT_3);
        assert!((integral - StandardizedBase::uniform().kurtosis()).abs() < 1e-8);
    }

    #[test]
    fn entropy_values() {
        let g = StandardizedBase::gaussian();
        assert!((g.entropy(1) - 1.418_938_533_204_672_7).abs() < 1e-12);
        assert!((g.entropy(2) - 2.0 * g.entropy(1)).abs() < 1e-12);
        assert!((StandardizedBase::uniform().entropy(1) - 1.242_453_324_894_000_4).abs() < 1e-12);
    }

    #[test]
    fn student_t_entropy_below_gaussian() {
        // the Gaussian maximizes entropy at fixed variance; large dof approaches it
        let g = StandardizedBase::gaussian().entropy(1);
        let t8 = StandardizedBase::student_t(8.0).unwrap().entropy(1);
        let t1000 = StandardizedBase::student_t(1000.0).unwrap().entropy(1);
        assert!(t8 < g);
        assert!((t1000 - g).abs() < 1e-4);
    }

    #[test]
    fn student_t_rejects_heavy_tails() {
        assert!(StandardizedBase::student_t(4.0).is_err());
        assert!(StandardizedBase::student_t(4.0 + 5e-7).is_err());
        assert!(StandardizedBase::student_t(4.1).is_ok());
    }

    #[test]
    fn parse_round_trip() {
        for b in all_bases() {
            let parsed: StandardizedBase = b.to_string().parse().unwrap();
            assert_eq!(parsed.kind(), b.kind());
        }
        assert!("cauchy".parse::<StandardizedBase>().is_err());
        assert!("student-t:x".parse::<StandardizedBase>().is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let b = StandardizedBase::gaussian();
        let a = b.sample(3, &mut stream(11, 0));
        let c = b.sample(3, &mut stream(11, 0));
        let other = b.sample(3, &mut stream(12, 0));
        assert_eq!(a, c);
        assert_ne!(a, other);
    }

    #[test]
    fn uniform_mean_near_zero() {
        let u = StandardizedBase::uniform().sample(1_000_000, &mut stream(5, 0));
        assert!(u.mean().abs() <= 4.0 / 1000.0);
    }

    #[test]
    fn student_t_unit_variance() {
        let u = StandardizedBase::student_t(8.0).unwrap().sample(1_000_000, &mut stream(6, 0));
        let var = u.iter().map(|x| x * x).sum::<f64>() / u.len() as f64;
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn moments_within_four_standard_errors() {
        let n = 1_000_000usize;
        for (k, b) in all_bases().into_iter().enumerate() {
            let u = b.sample(n, &mut stream(100 + k as u64, 0));
            for power in 1..=4 {
                let target = match power {
                    1 | 3 => 0.0,
                    2 => 1.0,
                    _ => b.kurtosis(),
                };
                let vals: Vec<f64> = u.iter().map(|x| x.powi(power)).collect();
                let mean = vals.iter().sum::<f64>() / n as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                assert!(
                    (mean - target).abs() <= 4.0 * se,
                    "{b} moment {power}: {mean} vs {target} (se {se})"
                );
            }
        }
    }
}
