mod common;

use common::{gaussian, random_problem, relative_lambda, rng};
use magma_core::linalg::{dist2, norm2};
use magma_core::multilevel::{build_chain, RestrictionChain};
use magma_core::problem::{gradient_mapping, CompositeProblem, L1LeastSquares, SmoothQuadratic, SmoothedView};
use magma_core::solvers::{
    agm, armijo_backtrack, armijo_search, coarse_condition, fista, ista, mfista, update_eta_alpha, Branch,
    CoarseUnavailable, MagmaState, MuSchedule, StepSizes,
};
use magma_core::{solve, SolverConfig, SolverKind, StepKind};
use ndarray::{array, Array1, Array2};

fn zeros(n: usize) -> Array1<f64> {
    Array1::zeros(n)
}

fn reference_optimum(p: &L1LeastSquares) -> (Array1<f64>, f64) {
    let cfg = SolverConfig { eps: 1e-12, max_iters: 400_000, ..Default::default() };
    let sol = fista(p, &zeros(p.dim()), &cfg).unwrap();
    assert!(sol.converged, "reference run did not converge");
    (sol.x, sol.objective)
}

#[test]
fn ista_one_dimensional_lasso_in_one_step() {
    let p = L1LeastSquares::with_lipschitz(array![[1.0]], array![2.0], 1.0, false, 1.0).unwrap();
    let cfg = SolverConfig { eps: 1e-12, ..Default::default() };
    let sol = ista(&p, &array![0.0], &cfg).unwrap();
    assert!(sol.converged);
    assert_eq!(sol.iterations, 1);
    assert_eq!(sol.x, array![1.0]);
    assert_eq!(sol.trace[0].objective, 1.5);
}

#[test]
fn ista_returns_immediately_at_the_minimizer() {
    let p = L1LeastSquares::with_lipschitz(array![[1.0]], array![2.0], 1.0, false, 1.0).unwrap();
    let sol = ista(&p, &array![1.0], &SolverConfig::default()).unwrap();
    assert!(sol.converged);
    assert_eq!(sol.iterations, 0);
    assert!(sol.trace.is_empty());
}

#[test]
fn ista_is_monotone() {
    let p = random_problem(3, 40, 30, 0.6, true, 0.05);
    let cfg = SolverConfig { max_iters: 500, ..Default::default() };
    let sol = ista(&p, &gaussian(&mut rng(1), p.dim(), 1.0), &cfg).unwrap();
    for w in sol.trace.windows(2) {
        assert!(w[1].objective <= w[0].objective);
    }
}

#[test]
fn fista_rate_bound_on_random_lasso() {
    let p = random_problem(50, 50, 100, 0.3, false, 1.0);
    let p = p.with_lambda(relative_lambda(&p, 0.1)).unwrap();
    let (x_star, f_star) = reference_optimum(&p);
    let x0 = zeros(p.dim());
    let cfg = SolverConfig { eps: 1e-9, max_iters: 5_000, ..Default::default() };
    let sol = fista(&p, &x0, &cfg).unwrap();
    let r2 = dist2(x0.view(), x_star.view()).powi(2);
    for row in &sol.trace {
        let iterate = row.k as f64 + 1.0;
        let bound = 2.0 * p.lipschitz() * r2 / (iterate + 1.0).powi(2);
        assert!(row.objective - f_star <= bound + 1e-10, "k={} gap {} bound {bound}", row.k, row.objective - f_star);
    }
}

#[test]
fn fista_matches_textbook_accelerated_gradient_on_quadratic() {
    let q = array![[3.0, 1.0, 0.0], [1.0, 2.0, 0.5], [0.0, 0.5, 1.0]];
    let c = array![1.0, -2.0, 0.5];
    let l = 4.0;
    let p = SmoothQuadratic::with_lipschitz(q.clone(), c.clone(), l).unwrap();
    let x0 = array![5.0, -1.0, 2.0];
    let cfg = SolverConfig { eps: 1e-300, max_iters: 40, ..Default::default() };
    let sol = fista(&p, &x0, &cfg).unwrap();

    let f = |x: &Array1<f64>| 0.5 * x.dot(&q.dot(x)) - c.dot(x);
    let mut x_prev = x0.clone();
    let mut y = x0.clone();
    let mut t = 1.0_f64;
    for row in &sol.trace {
        let grad = q.dot(&y) - &c;
        let x = &y - &(grad / l);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = &x + &((&x - &x_prev) * ((t - 1.0) / t_next));
        let expected = f(&x);
        assert!((row.objective - expected).abs() <= 1e-12 * (1.0 + expected.abs()), "k={}", row.k);
        x_prev = x;
        t = t_next;
    }
    assert_eq!(sol.trace.len(), 40);
}

#[test]
fn agm_quadratic_recursion_and_convergence() {
    let p = SmoothQuadratic::with_lipschitz(array![[2.0]], array![4.0], 2.0).unwrap();
    let cfg = SolverConfig { eps: 1e-12, max_iters: 10_000, ..Default::default() };
    let sol = agm(&p, &array![-3.0], &cfg).unwrap();
    assert!(sol.converged);
    assert!((sol.x[0] - 2.0).abs() < 1e-10);

    let (mut y, mut z) = (-3.0_f64, -3.0_f64);
    for row in &sol.trace {
        let k = row.k as f64;
        let t = 2.0 / (k + 2.0);
        let alpha = (k + 2.0) / 4.0;
        let x = t * z + (1.0 - t) * y;
        let g = 2.0 * x - 4.0;
        y = x - g / 2.0;
        z -= alpha * g;
        assert!((row.objective - (y * y - 4.0 * y)).abs() <= 1e-12);
    }
    assert!((y - 2.0).abs() < 1e-8);
    assert!((z - 2.0).abs() < 1e-6, "z = {z}");
}

#[test]
fn agm_rate_bound() {
    let p = random_problem(51, 60, 80, 0.5, true, 1.0);
    let p = p.with_lambda(relative_lambda(&p, 0.1)).unwrap();
    let (x_star, f_star) = reference_optimum(&p);
    let x0 = gaussian(&mut rng(9), p.dim(), 0.5);
    let theta = 0.5 * dist2(x0.view(), x_star.view()).powi(2);
    let sol = agm(&p, &x0, &SolverConfig { eps: 1e-9, max_iters: 3_000, ..Default::default() }).unwrap();
    for row in &sol.trace {
        let t = row.k as f64 + 1.0;
        let bound = 4.0 * theta * p.lipschitz() / (t * t);
        assert!(row.objective - f_star <= bound + 1e-10, "T={t}");
    }
}

/// With coarse steps in the run, `F(y_T) − F* ≤ (Θ+ζ)/(α_T²η_T)` at every row.
#[test]
fn magma_potential_bound_with_coarse_steps() {
    for seed in [61, 62, 63] {
        let p = random_problem(seed, 120, 64, 0.9, true, 1.0);
        let p = p.with_lambda(relative_lambda(&p, 0.1)).unwrap();
        let (x_star, f_star) = reference_optimum(&p);
        let x0 = gaussian(&mut rng(seed), p.dim(), 0.5);
        let theta = 0.5 * dist2(x0.view(), x_star.view()).powi(2);
        let zeta = 1.0;
        let cfg = SolverConfig {
            eps: 1e-9,
            max_iters: 1_500,
            mu: MuSchedule::Theoretical { zeta },
            levels: Some(3),
            ..Default::default()
        };
        let sol = solve(SolverKind::Magma, &p, &x0, &cfg).unwrap();
        assert!(sol.coarse_steps > 0, "seed {seed}: no coarse steps");
        assert!(sol.violations.is_empty(), "{:?}", sol.violations);
        for row in &sol.trace {
            let a2e = row.alpha.unwrap().powi(2) * row.eta.unwrap();
            let bound = (theta + zeta) / a2e;
            assert!(row.objective - f_star <= bound * (1.0 + 1e-9), "seed {seed} k={}", row.k);
        }
    }
}

struct Quad {
    q: Array2<f64>,
    c: Array1<f64>,
    l: f64,
}

impl magma_core::SmoothObjective for Quad {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn value(&self, x: &Array1<f64>) -> f64 {
        0.5 * x.dot(&self.q.dot(x)) - self.c.dot(x)
    }
    fn value_and_grad(&self, x: &Array1<f64>) -> (f64, Array1<f64>) {
        (self.value(x), self.q.dot(x) - &self.c)
    }
    fn lipschitz(&self) -> f64 {
        self.l
    }
}

#[test]
fn mfista_flags_stationary_start() {
    let obj = Quad { q: Array2::eye(2), c: array![1.0, 1.0], l: 1.0 };
    let err = mfista(&obj, &array![1.0, 1.0], 1e-3, 100).unwrap_err();
    assert!(matches!(err, CoarseUnavailable::Stationary { grad_norm } if grad_norm == 0.0));
}

#[test]
fn mfista_is_monotone_on_quadratics() {
    let mut r = rng(4);
    for _ in 0..10 {
        let m = Array2::from_shape_vec((6, 6), gaussian(&mut r, 36, 1.0).to_vec()).unwrap();
        let q = m.t().dot(&m) + Array2::<f64>::eye(6) * 0.01;
        let l = q.iter().map(|v| v.abs()).sum::<f64>();
        let obj = Quad { q, c: gaussian(&mut r, 6, 1.0), l };
        let sol = mfista(&obj, &gaussian(&mut r, 6, 3.0), 1e-9, 200).unwrap();
        let mut prev = sol.initial_value;
        for v in &sol.values {
            assert!(*v <= prev);
            prev = *v;
        }
        assert_eq!(sol.final_value, *sol.values.last().unwrap());
        assert!(sol.final_value < sol.initial_value);
    }
}

#[test]
fn mfista_and_gradient_descent_share_the_minimizer() {
    let obj = Quad { q: array![[4.0]], c: array![2.0], l: 4.0 };
    let sol = mfista(&obj, &array![10.0], 1e-12, 1000).unwrap();
    let mut x = 10.0_f64;
    for _ in 0..1000 {
        x -= (4.0 * x - 2.0) / 8.0;
    }
    assert!((sol.point[0] - 0.5).abs() < 1e-12);
    assert!((sol.point[0] - x).abs() < 1e-12);
}

#[test]
fn coarse_condition_false_at_zero_gradient() {
    let chain = build_chain(8, 2).unwrap();
    let cfg = SolverConfig::default();
    let state = MagmaState::new(1.0, &cfg);
    assert!(!coarse_condition(&chain, &zeros(8), &zeros(8), &state, &cfg).unwrap());
}

#[test]
fn coarse_condition_false_when_kappa_dominates_restriction_norm() {
    let chain = build_chain(16, 3).unwrap();
    let dense = chain.to_dense();
    let norm = nalgebra::DMatrix::from_fn(dense.nrows(), dense.ncols(), |i, j| dense[[i, j]])
        .singular_values()
        .max();
    assert!(norm < 1.0);
    let cfg = SolverConfig { kappa: norm, ..Default::default() };
    let state = MagmaState::new(1.0, &cfg);
    let mut r = rng(12);
    for _ in 0..200 {
        let g = gaussian(&mut r, 16, 1.0);
        assert!(!coarse_condition(&chain, &g, &g, &state, &cfg).unwrap());
    }
}

#[test]
fn coarse_condition_on_prolonged_vector() {
    // P[1, 0] = [1/2, 1/4, 0, 0] and R of that is [5/16, 1/16], so the ratio
    // of norms is sqrt(26/256) / sqrt(5/16) ≈ 0.570.
    let chain = build_chain(4, 2).unwrap();
    let g = chain.prolong(&array![1.0, 0.0]).unwrap();
    assert_eq!(g, array![0.5, 0.25, 0.0, 0.0]);
    assert_eq!(chain.restrict(&g).unwrap(), array![0.3125, 0.0625]);
    let ratio = (26.0_f64 / 256.0).sqrt() / (5.0_f64 / 16.0).sqrt();
    let x = zeros(4);
    for (kappa, expected) in [(0.5, true), (0.6, false), (ratio - 1e-9, true), (ratio + 1e-9, false)] {
        let cfg = SolverConfig { kappa, ..Default::default() };
        let state = MagmaState::new(1.0, &cfg);
        assert_eq!(coarse_condition(&chain, &g, &x, &state, &cfg).unwrap(), expected, "kappa {kappa}");
    }
}

#[test]
fn coarse_condition_proximity_clause() {
    let chain = build_chain(4, 2).unwrap();
    let g = array![0.5, 0.25, 0.0, 0.0];
    let cfg = SolverConfig { kappa: 0.5, kd: 3, theta: 0.5, ..Default::default() };
    let mut state = MagmaState::new(1.0, &cfg);
    state.x_tilde = Some(array![1.0, 0.0, 0.0, 0.0]);
    let near = array![1.1, 0.0, 0.0, 0.0];
    let far = array![2.0, 0.0, 0.0, 0.0];
    state.q = 3;
    assert!(!coarse_condition(&chain, &g, &near, &state, &cfg).unwrap());
    assert!(coarse_condition(&chain, &g, &far, &state, &cfg).unwrap());
    state.q = 2;
    assert!(coarse_condition(&chain, &g, &near, &state, &cfg).unwrap());
}

#[test]
fn armijo_weak_constant_accepts_first_decreasing_trial() {
    let phi = |s: f64| 0.5 * (1.0 - s) * (1.0 - s);
    let (s, v) = armijo_backtrack(phi, 0.5, -1.0, 1.9, 0.5, 1e-12, 100).unwrap();
    assert_eq!(s, 1.9);
    assert!(v <= 0.5);
    let (s, _) = armijo_backtrack(phi, 0.5, -1.0, 2.5, 0.5, 1e-12, 100).unwrap();
    assert_eq!(s, 1.25);
}

#[test]
fn armijo_search_accepts_exactly_the_stated_inequality() {
    let p = random_problem(8, 20, 12, 0.5, true, 0.1);
    let view = SmoothedView::new(&p, 1e-2).unwrap();
    let mut r = rng(8);
    let cfg = SolverConfig::default();
    for _ in 0..20 {
        let x = gaussian(&mut r, p.dim(), 1.0);
        let (f0, g) = view.value_and_grad(&x);
        let d = -&g + &gaussian(&mut r, p.dim(), 0.1 * norm2(g.view()) / (p.dim() as f64).sqrt());
        let s = armijo_search(&view, &x, &d, &cfg).unwrap().unwrap();
        assert!(view.value(&(&x + &(&d * s))) <= f0 + cfg.armijo_c * s * g.dot(&d));
        let k = (cfg.s0 / s).ln() / (1.0 / cfg.tau).ln();
        assert!((k - k.round()).abs() < 1e-9);
        if s < cfg.s0 {
            let bigger = s / cfg.tau;
            assert!(view.value(&(&x + &(&d * bigger))) > f0 + cfg.armijo_c * bigger * g.dot(&d));
        }
    }
}

#[test]
fn gradient_recursion_reproduces_closed_form_weights() {
    let l = 3.7;
    let cfg = SolverConfig::default();
    let mut sizes = StepSizes::initial(l);
    for k in 0..200 {
        let next = update_eta_alpha(sizes, k, Branch::Gradient, 1.0, l, 99.0, &cfg);
        let expected = (k as f64 + 2.0) / (2.0 * l);
        assert!((next.alpha - expected).abs() <= 1e-12 * expected, "k={k}");
        assert_eq!(next.eta, l);
        if k >= 1 {
            assert!(sizes.telescoping_error(&next) <= 1e-12);
            let t = next.t();
            assert!(t > 0.0 && t <= 1.0 + 1e-12);
            assert!((t - 2.0 / (k as f64 + 2.0)).abs() <= 1e-12);
        }
        sizes = next;
    }
}

#[test]
fn mixed_branches_keep_telescoping_and_t_in_range() {
    let l = 2.0;
    let cfg = SolverConfig::default();
    let mut r = rng(33);
    let mut sizes = StepSizes::initial(l);
    use rand::Rng;
    for k in 0..500 {
        let branch = if k > 0 && r.random_bool(0.5) { Branch::Coarse } else { Branch::Gradient };
        let s = 10f64.powf(r.random_range(-6.0..1.0));
        let next = update_eta_alpha(sizes, k, branch, s, l, r.random_range(0.1..50.0), &cfg);
        if k >= 1 {
            assert!(sizes.telescoping_error(&next) <= 1e-9, "k={k}");
            assert!(next.t() > 0.0 && next.t() <= 1.0 + 1e-12);
        }
        sizes = next;
    }
}

#[test]
fn magma_without_coarse_levels_reproduces_agm() {
    for seed in 0..3 {
        let p = random_problem(60 + seed, 40, 32, 0.8, true, 1e-3);
        let x0 = gaussian(&mut rng(seed), p.dim(), 1.0);
        let base = SolverConfig { eps: 1e-7, max_iters: 2_000, ..Default::default() };
        let a = agm(&p, &x0, &base).unwrap();
        let m = solve(SolverKind::Magma, &p, &x0, &SolverConfig { levels: Some(1), kappa: 1.0, ..base }).unwrap();
        assert_eq!(m.coarse_steps, 0);
        assert_eq!(m.trace.len(), a.trace.len());
        for (ra, rm) in a.trace.iter().zip(&m.trace) {
            assert_eq!(rm.step_kind, StepKind::Grad);
            assert!((ra.objective - rm.objective).abs() <= 1e-10 * (1.0 + ra.objective.abs()), "k={}", ra.k);
        }
        assert!(dist2(a.x.view(), m.x.view()) <= 1e-10);
    }
}

#[test]
fn magma_agrees_with_fista_at_tight_tolerance() {
    let p = random_problem(70, 400, 256, 0.9, true, 1.0);
    let p = p.with_lambda(relative_lambda(&p, 0.1)).unwrap();
    let cfg = SolverConfig { eps: 1e-10, max_iters: 200_000, ..Default::default() };
    let x0 = zeros(p.dim());
    let f = solve(SolverKind::Fista, &p, &x0, &cfg).unwrap();
    let m = solve(SolverKind::Magma, &p, &x0, &cfg).unwrap();
    assert!(f.converged && m.converged);
    assert!(m.violations.is_empty(), "{:?}", m.violations);
    assert!((f.objective - m.objective).abs() <= 1e-8, "{} vs {}", f.objective, m.objective);
}

#[test]
fn solvers_reach_the_same_objective_on_desk_instances() {
    for seed in 0..3 {
        let p = random_problem(80 + seed, 120, 64, 0.9, true, 1.0);
        let p = p.with_lambda(relative_lambda(&p, 0.1)).unwrap();
        let cfg = SolverConfig { eps: 1e-8, max_iters: 100_000, ..Default::default() };
        let x0 = zeros(p.dim());
        let values: Vec<f64> = [SolverKind::Fista, SolverKind::Agm, SolverKind::Magma]
            .iter()
            .map(|&k| solve(k, &p, &x0, &cfg).unwrap().objective)
            .collect();
        for v in &values {
            assert!((v - values[0]).abs() <= 1e-7, "{values:?}");
        }
    }
}

#[test]
fn converged_solutions_pass_an_independent_stopping_check() {
    let p = random_problem(90, 80, 48, 0.7, true, 1.0);
    let p = p.with_lambda(relative_lambda(&p, 0.1)).unwrap();
    let cfg = SolverConfig { eps: 1e-6, max_iters: 50_000, ..Default::default() };
    for kind in [SolverKind::Ista, SolverKind::Fista, SolverKind::Agm, SolverKind::Magma] {
        let sol = solve(kind, &p, &zeros(p.dim()), &cfg).unwrap();
        assert!(sol.converged, "{kind}");
        let d = norm2(gradient_mapping(&p, &sol.x).unwrap().view());
        assert!(d < cfg.eps, "{kind}: {d}");
        assert!((d - sol.grad_map_norm).abs() <= 1e-9 * d, "{kind}");
        assert!((p.objective(&sol.x) - sol.objective).abs() <= 1e-12 * (1.0 + sol.objective.abs()));
    }
}

#[test]
fn magma_takes_coarse_steps_and_respects_live_invariants() {
    let p = random_problem(91, 200, 128, 0.9, true, 1e-6);
    let chain = RestrictionChain::for_problem(&p, 3).unwrap();
    assert_eq!(chain.coarse_dim(), 32 + 200);
    let cfg = SolverConfig { levels: Some(3), max_iters: 300, ..Default::default() };
    let sol = solve(SolverKind::Magma, &p, &zeros(p.dim()), &cfg).unwrap();
    assert!(sol.coarse_steps > 0);
    assert!(sol.violations.is_empty(), "{:?}", sol.violations);
    assert_eq!(sol.trace.last().unwrap().step_kind == StepKind::Coarse, false);
    for rep in &sol.coarse_reports {
        assert!(rep.slope < rep.bound + 1e-9);
        assert!(rep.coarse_final < rep.coarse_first);
    }
}
