//! Positive sampling distributions over component indices.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::bounds::{component_terms, Mode};
use crate::error::{Error, Result};
use crate::locscale::Params;
use crate::smoothness::SmoothnessSpec;

/// Below this total square-root mass the optimal sampler falls back to uniform.
pub const DEGENERATE_MASS: f64 = 1e-30;

/// Relative floor applied to optimal weights so every index stays reachable.
const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SamplerLabel {
    Uniform,
    Proportional,
    OptScalar,
    OptMatrix,
}

impl SamplerLabel {
    pub const ALL: [SamplerLabel; 4] = [
        SamplerLabel::Uniform,
        SamplerLabel::Proportional,
        SamplerLabel::OptScalar,
        SamplerLabel::OptMatrix,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SamplerLabel::Uniform => "uniform",
            SamplerLabel::Proportional => "proportional",
            SamplerLabel::OptScalar => "opt_scalar",
            SamplerLabel::OptMatrix => "opt_matrix",
        }
    }
}

impl fmt::Display for SamplerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown sampler {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct SamplerDist {
    weights: Vec<f64>,
    label: SamplerLabel,
    index: WeightedIndex<f64>,
}

impl PartialEq for SamplerDist {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights && self.label == other.label
    }
}

impl SamplerDist {
    /// Normalizes strictly positive, finite weights.
    pub fn new(weights: Vec<f64>, label: SamplerLabel) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("sampler needs at least one component".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("sampler weights must be positive and finite".into()));
        }
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        let index = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidParameter(format!("sampler weights: {e}")))?;
        Ok(Self {
            weights,
            label,
            index,
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n], SamplerLabel::Uniform)
    }

    /// `pi(n)` proportional to the scalar smoothness constant of `f_n`.
    pub fn proportional(spec: &SmoothnessSpec) -> Result<Self> {
        Self::new(
            spec.components.iter().map(|c| c.scalar).collect(),
            SamplerLabel::Proportional,
        )
    }

    /// Minimizer of the subsampled ESN bound: `pi(n)` proportional to the
    /// square root of the component's bound term.
    pub fn optimal(
        spec: &SmoothnessSpec,
        zbars: &[DVector<f64>],
        w: &Params,
        kappa: f64,
        mode: Mode,
    ) -> Result<Self> {
        let label = match mode {
            Mode::Scalar => SamplerLabel::OptScalar,
            Mode::Matrix => SamplerLabel::OptMatrix,
        };
        let roots: Vec<f64> = component_terms(spec, zbars, w, kappa, mode)?
            .into_iter()
            .map(f64::sqrt)
            .collect();
        let total: f64 = roots.iter().sum();
        if !(total > DEGENERATE_MASS) {
            return Self::new(vec![1.0; roots.len()], label);
        }
        let floor = WEIGHT_FLOOR * roots.iter().copied().fold(0.0, f64::max);
        Self::new(roots.into_iter().map(|r| r.max(floor)).collect(), label)
    }

    pub fn by_label(
        label: SamplerLabel,
        spec: &SmoothnessSpec,
        zbars: &[DVector<f64>],
        w: &Params,
        kappa: f64,
    ) -> Result<Self> {
        match label {
            SamplerLabel::Uniform => Self::uniform(spec.components.len()),
            SamplerLabel::Proportional => Self::proportional(spec),
            SamplerLabel::OptScalar => Self::optimal(spec, zbars, w, kappa, Mode::Scalar),
            SamplerLabel::OptMatrix => Self::optimal(spec, zbars, w, kappa, Mode::Matrix),
        }
    }

    pub fn label(&self) -> SamplerLabel {
        self.label
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, n: usize) -> f64 {
        self.weights[n]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoothness::{ComponentSmoothness, SmoothMatrix};
    use nalgebra::DMatrix;

    fn scalar_spec(scalars: &[f64]) -> SmoothnessSpec {
        SmoothnessSpec {
            full_matrix: DMatrix::identity(1, 1),
            full_scalar: 1.0,
            components: scalars
                .iter()
                .map(|&s| ComponentSmoothness {
                    matrix: SmoothMatrix::Dense(DMatrix::from_element(1, 1, s)),
                    scalar: s,
                })
                .collect(),
        }
    }

    #[test]
    fn uniform_and_proportional() {
        assert_eq!(SamplerDist::uniform(4).unwrap().weights(), &[0.25; 4]);
        let p = SamplerDist::proportional(&scalar_spec(&[1.0, 3.0])).unwrap();
        assert_eq!(p.weights(), &[0.25, 0.75]);
        let q = SamplerDist::proportional(&scalar_spec(&[2.0, 2.0, 2.0])).unwrap();
        let u = SamplerDist::uniform(3).unwrap();
        assert_eq!(q.weights(), u.weights());
    }

    #[test]
    fn optimal_uses_square_roots() {
        // terms: (d+1)(M (m - zbar))^2 with d = 1, C = 0: 2 * s^2 * 1
        // choose s so that terms are 1 and 4
        let s1 = (0.5f64).sqrt();
        let s2 = (2.0f64).sqrt();
        let spec = scalar_spec(&[s1, s2]);
        let w = Params::point_mass(DVector::from_vec(vec![1.0]));
        let zbars = vec![DVector::zeros(1), DVector::zeros(1)];
        let terms = component_terms(&spec, &zbars, &w, 3.0, Mode::Matrix).unwrap();
        assert!((terms[0] - 1.0).abs() < 1e-12 && (terms[1] - 4.0).abs() < 1e-12);
        let pi = SamplerDist::optimal(&spec, &zbars, &w, 3.0, Mode::Matrix).unwrap();
        assert!((pi.weight(0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((pi.weight(1) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_degenerates_to_uniform() {
        let spec = scalar_spec(&[1.0, 5.0]);
        let zbar = DVector::from_vec(vec![0.3]);
        let w = Params::point_mass(zbar.clone());
        let pi = SamplerDist::optimal(&spec, &[zbar.clone(), zbar], &w, 3.0, Mode::Matrix).unwrap();
        assert_eq!(pi.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(SamplerDist::new(vec![1.0, 0.0], SamplerLabel::Uniform).is_err());
        assert!(SamplerDist::new(vec![], SamplerLabel::Uniform).is_err());
        assert!(SamplerDist::new(vec![1.0, f64::INFINITY], SamplerLabel::Uniform).is_err());
    }

    #[test]
    fn labels_round_trip() {
        for l in SamplerLabel::ALL {
            assert_eq!(l.as_str().parse::<SamplerLabel>().unwrap(), l);
        }
    }
}
