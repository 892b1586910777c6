//! Bregman geometry and the mirror-descent step.

use ndarray::Array1;

use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::problem::CompositeProblem;

/// A 1-strongly convex distance generating function `ω` together with a
/// closed-form mirror step for composite objectives.
pub trait BregmanGeometry: Send + Sync {
    fn dgf(&self, x: &Array1<f64>) -> f64;

    fn dgf_grad(&self, x: &Array1<f64>) -> Array1<f64>;

    /// `V_x(z) = ω(z) − ⟨∇ω(x), z − x⟩ − ω(x)`
    fn divergence(&self, x: &Array1<f64>, z: &Array1<f64>) -> f64 {
        let diff = z - x;
        self.dgf(z) - self.dgf_grad(x).dot(&diff) - self.dgf(x)
    }

    /// `argmin_u { V_z(u) + ⟨αξ, u − z⟩ + α g(u) }`
    fn mirror_step<P: CompositeProblem + ?Sized>(
        &self,
        problem: &P,
        z: &Array1<f64>,
        xi: &Array1<f64>,
        alpha: f64,
    ) -> Array1<f64>;
}

/// `ω(x) = ½‖x‖₂²`, so `V_x(z) = ½‖x − z‖₂²` and the mirror step is a
/// proximal step on `z − αξ` with step `α`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl BregmanGeometry for Euclidean {
    fn dgf(&self, x: &Array1<f64>) -> f64 {
        0.5 * x.dot(x)
    }

    fn dgf_grad(&self, x: &Array1<f64>) -> Array1<f64> {
        x.clone()
    }

    fn divergence(&self, x: &Array1<f64>, z: &Array1<f64>) -> f64 {
        let d = linalg::dist2(x.view(), z.view());
        0.5 * d * d
    }

    fn mirror_step<P: CompositeProblem + ?Sized>(
        &self,
        problem: &P,
        z: &Array1<f64>,
        xi: &Array1<f64>,
        alpha: f64,
    ) -> Array1<f64> {
        let shifted = linalg::lincomb(1.0, z, -alpha, xi);
        problem.penalty_prox(&shifted, alpha)
    }
}

pub fn bregman<G: BregmanGeometry + ?Sized>(geometry: &G, x: &Array1<f64>, z: &Array1<f64>) -> Result<f64> {
    check_len("bregman", x.len(), z.len())?;
    Ok(geometry.divergence(x, z))
}

pub fn mirror_step<G: BregmanGeometry, P: CompositeProblem + ?Sized>(
    geometry: &G,
    problem: &P,
    z: &Array1<f64>,
    xi: &Array1<f64>,
    alpha: f64,
) -> Result<Array1<f64>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", format!("mirror step size must be positive, got {alpha}")));
    }
    check_len("mirror_step point", problem.dim(), z.len())?;
    check_len("mirror_step direction", problem.dim(), xi.len())?;
    Ok(geometry.mirror_step(problem, z, xi, alpha))
}
