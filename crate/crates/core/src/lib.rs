//! Reparameterization-gradient variational inference for location-scale
//! families, with closed-form bounds on the gradient estimator's expected
//! squared norm.
//!
//! ```
//! use nalgebra::{DMatrix, DVector};
//! use varbound::{estimators, locscale::Params, StandardizedBase};
//!
//! let w = Params::new(DVector::from_vec(vec![1.0]), DMatrix::from_element(1, 1, 1.0)).unwrap();
//! let zbar = DVector::zeros(1);
//! let kappa = StandardizedBase::gaussian().kurtosis();
//! let bound = estimators::esn_bound_scalar(2.0, &w, &zbar, kappa).unwrap();
//! assert!((bound - 24.0).abs() < 1e-12);
//! ```

pub mod base;
pub mod diagnostics;
mod error;
pub mod estimators;
pub mod io;
pub mod linalg;
pub mod locscale;
pub mod mc;
pub mod optimizer;
pub mod rng;
pub mod selftest;
pub mod smoothness;
pub mod synthetic;
pub mod targets;

pub use base::{BaseKind, StandardizedBase};
pub use error::{Error, Result};
pub use locscale::Params;
pub use targets::Target;
