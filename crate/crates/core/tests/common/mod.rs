#![allow(dead_code)]

use magma_core::harness::gen_correlated_dictionary;
use magma_core::problem::L1LeastSquares;
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Array1<f64> {
    (0..n).map(|_| { let z: f64 = StandardNormal.sample(rng); scale * z }).collect()
}

/// Random correlated ℓ1 least-squares instance with a Gaussian observation.
pub fn random_problem(seed: u64, m: usize, n: usize, rho: f64, bucket: bool, lambda: f64) -> L1LeastSquares {
    let a = gen_correlated_dictionary(m, n, rho, seed).unwrap();
    let mut r = rng(seed ^ 0xb0b);
    let b = gaussian(&mut r, m, 1.0);
    L1LeastSquares::new(a, b, lambda, bucket).unwrap()
}

/// Small random instance with shape and flags drawn from `seed`.
pub fn any_problem(seed: u64) -> L1LeastSquares {
    let mut r = rng(seed);
    let m = r.random_range(3..25);
    let n = r.random_range(2..30);
    let rho = r.random_range(0.0..0.95);
    let bucket = r.random_bool(0.5);
    let lambda = 10f64.powf(r.random_range(-4.0..0.0));
    random_problem(seed.wrapping_add(17), m, n, rho, bucket, lambda)
}

/// `λ‖Bᵀb‖∞ · rel`, the usual way to pick a nontrivial regularization level.
pub fn relative_lambda(p: &L1LeastSquares, rel: f64) -> f64 {
    let g = p.dictionary().apply_adjoint(p.observation());
    rel * g.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}
