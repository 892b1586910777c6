//! Small dense vector helpers and a power-iteration spectral estimate.

use ndarray::{Array1, ArrayView1, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Multiplicative margin applied on top of a power-iteration estimate so the
/// result can be used as an upper bound on a Lipschitz constant.
pub const LIPSCHITZ_SAFETY: f64 = 1.01;

pub const POWER_TOL: f64 = 1e-6;
pub const POWER_MAX_ITERS: usize = 10_000;

pub fn norm2(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

pub fn norm_inf(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm1(v: ArrayView1<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn dist2(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    Zip::from(a)
        .and(b)
        .fold(0.0, |acc, &x, &y| acc + (x - y) * (x - y))
        .sqrt()
}

/// `a * x + b * y`
pub fn lincomb(a: f64, x: &Array1<f64>, b: f64, y: &Array1<f64>) -> Array1<f64> {
    Zip::from(x).and(y).map_collect(|&u, &v| a * u + b * v)
}

/// Shrinkage operator `T_t(v)_i = (|v_i| - t)_+ sgn(v_i)`.
pub fn soft_threshold(v: ArrayView1<f64>, t: f64) -> Array1<f64> {
    v.mapv(|x| soft_threshold_scalar(x, t))
}

#[inline]
pub fn soft_threshold_scalar(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PowerEstimate {
    pub value: f64,
    pub iterations: usize,
}

/// Largest eigenvalue of a symmetric positive semidefinite operator.
///
/// Iterates on the Rayleigh quotient until its relative change drops below
/// `tol`. The start vector is drawn from a fixed seed so repeated calls agree
/// bitwise.
pub fn power_iteration<F>(apply: F, dim: usize, tol: f64, max_iters: usize) -> Result<PowerEstimate>
where
    F: Fn(&Array1<f64>) -> Array1<f64>,
{
    if dim == 0 {
        return Ok(PowerEstimate {
            value: 0.0,
            iterations: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_1e7);
    let mut v: Array1<f64> = (0..dim)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let n0 = norm2(v.view());
    v /= n0;

    let mut estimate = 0.0;
    for it in 1..=max_iters {
        let w = apply(&v);
        let rayleigh = v.dot(&w);
        let wn = norm2(w.view());
        if wn == 0.0 {
            return Ok(PowerEstimate {
                value: 0.0,
                iterations: it,
            });
        }
        let converged = it > 3 && (rayleigh - estimate).abs() <= tol * rayleigh.abs();
        estimate = rayleigh;
        if converged {
            return Ok(PowerEstimate {
                value: estimate,
                iterations: it,
            });
        }
        v = w / wn;
    }
    Err(Error::PowerIteration {
        iterations: max_iters,
        estimate,
    })
}
