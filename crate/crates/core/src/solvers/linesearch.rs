use ndarray::Array1;
use thiserror::Error;

use super::SolverConfig;
use crate::error::{check_len, Result};
use crate::linalg;
use crate::problem::{CompositeProblem, SmoothedView};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LineSearchFailure {
    #[error("direction is not a descent direction (slope {slope})")]
    NotDescent { slope: f64 },
    #[error("no step satisfied the sufficient decrease test after {reductions} reductions")]
    Exhausted { reductions: usize },
}

/// Backtracks `s = s0, τs0, τ²s0, …` until `φ(s) ≤ φ(0) + c s φ'(0)`.
///
/// Returns the accepted step and `φ` at it.
pub fn armijo_backtrack<F>(
    phi: F,
    phi0: f64,
    slope: f64,
    s0: f64,
    tau: f64,
    c: f64,
    max_reductions: usize,
) -> std::result::Result<(f64, f64), LineSearchFailure>
where
    F: Fn(f64) -> f64,
{
    if !(slope < 0.0) {
        return Err(LineSearchFailure::NotDescent { slope });
    }
    let mut s = s0;
    for _ in 0..=max_reductions {
        let value = phi(s);
        if value <= phi0 + c * s * slope {
            return Ok((s, value));
        }
        s *= tau;
    }
    Err(LineSearchFailure::Exhausted {
        reductions: max_reductions,
    })
}

/// Armijo search on `F_μ` along `d` from `x` using the configured `s0`, `τ`,
/// `c` and reduction cap.
pub fn armijo_search<P: CompositeProblem + ?Sized>(
    view: &SmoothedView<'_, P>,
    x: &Array1<f64>,
    d: &Array1<f64>,
    config: &SolverConfig,
) -> Result<std::result::Result<f64, LineSearchFailure>> {
    check_len("line search point", view.problem().dim(), x.len())?;
    check_len("line search direction", x.len(), d.len())?;
    let (phi0, grad) = view.value_and_grad(x);
    let slope = grad.dot(d);
    let phi = |s: f64| view.value(&linalg::lincomb(1.0, x, s, d));
    Ok(armijo_backtrack(phi, phi0, slope, config.s0, config.tau, config.armijo_c, config.max_backtracks).map(|(s, _)| s))
}
