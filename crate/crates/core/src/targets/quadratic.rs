//! Concave quadratic targets `f(z) = -1/2 (z - zbar)^T M (z - zbar)`.
//!
//! These are exactly `M`-matrix-smooth, which makes every gradient-norm
//! bound an equality; they are the tightness witnesses.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::check_symmetric_psd;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadComponent {
    pub m: DMatrix<f64>,
    pub zbar: DVector<f64>,
}

impl QuadComponent {
    pub fn new(m: DMatrix<f64>, zbar: DVector<f64>) -> Result<Self> {
        check_dim(m.nrows(), zbar.len())?;
        check_symmetric_psd(&m, "quadratic curvature")?;
        Ok(Self { m, zbar })
    }

    fn log_density(&self, z: &DVector<f64>) -> f64 {
        let r = z - &self.zbar;
        -0.5 * r.dot(&(&self.m * &r))
    }

    fn grad_into(&self, z: &DVector<f64>, out: &mut DVector<f64>, beta: f64) {
        // out = beta * out - M (z - zbar); exactly zero at zbar
        let r = z - &self.zbar;
        out.gemv(-1.0, &self.m, &r, beta);
    }
}

/// Sum of quadratic components. The full-target `M` is the sum of the
/// component matrices and `zbar` its stationary point.
#[derive(Clone, Debug)]
pub struct QuadraticTarget {
    m: DMatrix<f64>,
    zbar: DVector<f64>,
    components: Vec<QuadComponent>,
}

impl QuadraticTarget {
    /// A single quadratic; it is also its own (only) component.
    pub fn new(m: DMatrix<f64>, zbar: DVector<f64>) -> Result<Self> {
        let c = QuadComponent::new(m.clone(), zbar.clone())?;
        Ok(Self {
            m,
            zbar,
            components: vec![c],
        })
    }

    pub fn from_components(components: Vec<QuadComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidParameter("need at least one component".into()))?;
        let d = first.zbar.len();
        if components.len() == 1 {
            return Self::new(first.m.clone(), first.zbar.clone());
        }
        let mut m = DMatrix::zeros(d, d);
        let mut rhs = DVector::zeros(d);
        for c in &components {
            check_dim(d, c.zbar.len())?;
            m += &c.m;
            rhs += &c.m * &c.zbar;
        }
        let zbar = m
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-12 * m.amax().max(f64::MIN_POSITIVE))
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Self {
            m,
            zbar,
            components,
        })
    }

    pub fn dim(&self) -> usize {
        self.zbar.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Stationary point of the full target.
    pub fn zbar(&self) -> &DVector<f64> {
        &self.zbar
    }

    pub fn components(&self) -> &[QuadComponent] {
        &self.components
    }

    pub fn log_density(&self, z: &DVector<f64>) -> f64 {
        self.components.iter().map(|c| c.log_density(z)).sum()
    }

    pub fn grad_into(&self, z: &DVector<f64>, out: &mut DVector<f64>) {
        out.fill(0.0);
        for c in &self.components {
            c.grad_into(z, out, 1.0);
        }
    }

    pub fn grad_batch_into(&self, z: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        out.fill(0.0);
        for c in &self.components {
            let mut r = z.clone();
            for mut col in r.column_iter_mut() {
                col -= &c.zbar;
            }
            out.gemm(-1.0, &c.m, &r, 1.0);
        }
    }

    pub fn hessian(&self) -> DMatrix<f64> {
        -&self.m
    }

    pub fn component_log_density(&self, n: usize, z: &DVector<f64>) -> f64 {
        self.components[n].log_density(z)
    }

    pub fn component_grad_into(&self, n: usize, z: &DVector<f64>, out: &mut DVector<f64>) {
        self.components[n].grad_into(z, out, 0.0);
    }

    pub fn component_hessian(&self, n: usize) -> DMatrix<f64> {
        -&self.components[n].m
    }
}
