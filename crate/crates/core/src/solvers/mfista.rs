use ndarray::Array1;
use thiserror::Error;

use crate::linalg;
use crate::problem::SmoothObjective;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum CoarseUnavailable {
    #[error("coarse gradient norm {grad_norm} is already below the tolerance")]
    Stationary { grad_norm: f64 },
    #[error("the first coarse iteration did not decrease the model")]
    NoDescent,
}

#[derive(Debug, Clone)]
pub struct CoarseSolve {
    pub point: Array1<f64>,
    /// `F_H` at the starting point.
    pub initial_value: f64,
    /// `F_H(x_{H,1})`
    pub first_value: f64,
    /// `F_H(x_{H,N})`
    pub final_value: f64,
    /// `F_H(x_{H,j})` for `j = 1..=N`.
    pub values: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Monotone FISTA on a smooth objective, stopping once `‖∇F(x_j)‖₂ < tol` or
/// after `max_iters` iterations.
pub fn mfista<O: SmoothObjective + ?Sized>(
    objective: &O,
    x0: &Array1<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<CoarseSolve, CoarseUnavailable> {
    let (f0, g0) = objective.value_and_grad(x0);
    let g0_norm = linalg::norm2(g0.view());
    if g0_norm < tol || max_iters == 0 {
        return Err(CoarseUnavailable::Stationary { grad_norm: g0_norm });
    }
    let l = objective.lipschitz();

    let mut x = x0.clone();
    let mut fx = f0;
    let mut gx_norm = g0_norm;
    let mut y = x0.clone();
    let mut gy = g0;
    let mut t = 1.0_f64;
    let mut values = Vec::new();

    for j in 1..=max_iters {
        if j > 1 {
            gy = objective.grad(&y);
        }
        let z = linalg::lincomb(1.0, &y, -1.0 / l, &gy);
        let (fz, gz) = objective.value_and_grad(&z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let accepted = fz <= fx;
        let x_new = if accepted { z.clone() } else { x.clone() };
        // y = x_j + (t/t')(z − x_j) + ((t−1)/t')(x_j − x_{j−1})
        y = &x_new + &((&z - &x_new) * (t / t_next)) + ((&x_new - &x) * ((t - 1.0) / t_next));
        x = x_new;
        if accepted {
            fx = fz;
            gx_norm = linalg::norm2(gz.view());
        }
        t = t_next;
        values.push(fx);

        if j == 1 && !(fx < f0) {
            return Err(CoarseUnavailable::NoDescent);
        }
        if gx_norm < tol {
            break;
        }
    }

    Ok(CoarseSolve {
        point: x,
        initial_value: f0,
        first_value: values[0],
        final_value: fx,
        iterations: values.len(),
        values,
        grad_norm: gx_norm,
    })
}
