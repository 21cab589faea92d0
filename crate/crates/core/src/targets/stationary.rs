use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;
const MAX_HALVINGS: usize = 60;
const ARMIJO: f64 = 1e-4;

/// Damped Newton ascent with backtracking for a concave objective; falls
/// back to the gradient direction when the negated Hessian is not positive
/// definite.
pub(super) fn maximize(
    start: DVector<f64>,
    tol: f64,
    f: impl Fn(&DVector<f64>) -> f64,
    grad: impl Fn(&DVector<f64>) -> DVector<f64>,
    hess: impl Fn(&DVector<f64>) -> DMatrix<f64>,
) -> Result<DVector<f64>> {
    let mut z = start;
    let mut fz = f(&z);
    let mut g = grad(&z);
    for _ in 0..MAX_ITER {
        let gnorm = g.norm();
        if gnorm <= tol {
            return Ok(z);
        }
        if !gnorm.is_finite() || !fz.is_finite() {
            break;
        }
        let dir = match (-hess(&z)).cholesky() {
            Some(ch) => ch.solve(&g),
            None => g.clone(),
        };
        let slope = g.dot(&dir);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = &z + &dir * step;
            let fc = f(&cand);
            if fc >= fz + ARMIJO * step * slope {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, fc)) => {
                z = cand;
                fz = fc;
                g = grad(&z);
            }
            None => {
                // f is flat to rounding here; take the Newton step if it
                // still shrinks the gradient.
                let cand = &z + &dir;
                let gc = grad(&cand);
                if gc.norm() < gnorm {
                    fz = f(&cand);
                    z = cand;
                    g = gc;
                } else {
                    break;
                }
            }
        }
    }
    let residual = g.norm();
    if residual <= tol {
        Ok(z)
    } else {
        Err(Error::NonConvergence {
            best: z.iter().copied().collect(),
            residual,
        })
    }
}
