//! Named invariant suites behind `magma check`, also reused by the
//! acceptance run with larger parameters.

use std::fmt;

use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::harness::{gen_correlated_dictionary, gen_instance_seeded, starting_point, subgradient_residual, ExperimentSpec};
use crate::linalg::{self, soft_threshold_scalar};
use crate::mirror::{bregman, mirror_step, Euclidean};
use crate::multilevel::{build_coarse_model, max_depth, CoarseSpace, RestrictionChain};
use crate::problem::{prog, prox_step, CompositeProblem, L1LeastSquares, SmoothObjective, SmoothedView};
use crate::solvers::{solve, Solution, SolverConfig, SolverKind};

pub const SUITES: [&str; 6] = ["coherence", "descent", "guarantees", "smoothing", "bookkeeping", "oracle"];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub suite: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest normalized violation seen; `≤ 0` means every case had slack.
    pub worst: f64,
    /// First failing case, if any.
    pub first_failure: Option<String>,
}

impl CheckReport {
    pub fn new(suite: &str) -> Self {
        CheckReport {
            suite: suite.to_string(),
            cases: 0,
            failures: 0,
            worst: f64::NEG_INFINITY,
            first_failure: None,
        }
    }

    /// Records one case whose excess over its tolerance is `excess`.
    fn case(&mut self, excess: f64, describe: impl FnOnce() -> String) {
        self.cases += 1;
        self.worst = self.worst.max(excess);
        if !(excess <= 0.0) {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(describe());
            }
        }
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.cases += other.cases;
        self.failures += other.failures;
        self.worst = self.worst.max(other.worst);
        if self.first_failure.is_none() {
            self.first_failure = other.first_failure;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {} cases, {} failures", self.suite, self.cases, self.failures)?;
        if let Some(first) = &self.first_failure {
            write!(f, "; first failure: {first}")?;
        }
        Ok(())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Array1<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

/// Small random ℓ1 instance whose shape and flags come from `rng`.
fn random_instance(rng: &mut ChaCha8Rng) -> Result<L1LeastSquares> {
    let m = rng.random_range(8..60);
    let n = rng.random_range(4..80);
    let rho = rng.random_range(0.0..0.95);
    let a = gen_correlated_dictionary(m, n, rho, rng.random())?;
    let b = gaussian(rng, m, 1.0);
    let lambda = 10f64.powf(rng.random_range(-6.0..0.0));
    L1LeastSquares::new(a, b, lambda, rng.random_bool(0.5))
}

/// `‖∇F_H(Rx) − R∇F_μ(x)‖₂ ≤ 1e-10·(1 + ‖R∇F_μ(x)‖₂)` on `pairs` random
/// (instance, chain, point, μ) draws.
pub fn coherence(pairs: usize, seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("coherence");
    let mut r = rng(seed);
    for i in 0..pairs {
        let p = random_instance(&mut r)?;
        let levels = r.random_range(2..=max_depth(p.dictionary().atoms()));
        let space = CoarseSpace::new(&p, RestrictionChain::for_problem(&p, levels)?)?;
        let mu = 10f64.powf(r.random_range(-4.0..0.0));
        let scale = r.random_range(0.01..10.0);
        let x = gaussian(&mut r, p.dim(), scale);
        let model = build_coarse_model(&p, &space, &x, mu, mu)?;
        let target = space.chain().restrict(&SmoothedView::new(&p, mu)?.grad(&x))?;
        let got = model.grad(model.anchor());
        let err = linalg::dist2(got.view(), target.view());
        let tol = 1e-10 * (1.0 + linalg::norm2(target.view()));
        report.case(err / tol - 1.0, || format!("pair {i}: residual {err:e} above {tol:e}"));
    }
    Ok(report)
}

/// Gradient and mirror descent guarantees on `points` random points each,
/// failing when the slack drops below `−1e-8`.
pub fn guarantees(points: usize, seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("guarantees");
    let mut r = rng(seed);
    for i in 0..points {
        let p = random_instance(&mut r)?;
        let scale = r.random_range(0.01..10.0);
        let x = gaussian(&mut r, p.dim(), scale);
        let l = p.lipschitz();
        let fx = p.objective(&x);
        let pr = prog(&p, &x, l)?;
        let slack = fx - pr - p.objective(&prox_step(&p, &x, l)?);
        report.case(-slack - 1e-8, || format!("gradient point {i}: slack {slack:e}"));
    }
    for i in 0..points {
        let p = random_instance(&mut r)?;
        let scale = r.random_range(0.01..10.0);
        let x = gaussian(&mut r, p.dim(), scale);
        let scale = r.random_range(0.01..10.0);
        let u = gaussian(&mut r, p.dim(), scale);
        let l = p.lipschitz();
        let alpha = r.random_range(0.01..=1.0) / l;
        let plus = mirror_step(&Euclidean, &p, &x, &p.smooth_grad(&x), alpha)?;
        let lhs = alpha * (p.objective(&x) - p.objective(&u));
        let rhs = alpha * alpha * l * prog(&p, &x, l)? + bregman(&Euclidean, &x, &u)? - bregman(&Euclidean, &plus, &u)?;
        let slack = rhs - lhs;
        report.case(-slack - 1e-8, || format!("mirror point {i}: slack {slack:e}"));
    }
    Ok(report)
}

/// `g ≤ g_μ ≤ g + λ·dim·μ` to 1e-12 relative, and
/// `‖∇g_μ(x) − ∇g_μ(y)‖ ≤ (λ/μ)‖x − y‖` on `points` random pairs, with the
/// largest observed ratio required to approach the bound from below.
pub fn smoothing(points: usize, seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("smoothing");
    let mut r = rng(seed);
    let mut best_ratio = 0.0_f64;
    for i in 0..points {
        let p = random_instance(&mut r)?;
        let mu = 10f64.powf(r.random_range(-6.0..0.0));
        let scale = 10f64.powf(r.random_range(-4.0..1.0));
        let x = gaussian(&mut r, p.dim(), scale);
        let g = p.penalty_value(&x);
        let gap = p.smoothed_penalty_value(&x, mu) - g;
        let tol = 1e-12 * (1.0 + g);
        let upper = p.smoothing().beta() * mu;
        report.case(-gap - tol, || format!("point {i}: g_mu below g by {:e}", -gap));
        report.case(gap - upper - tol, || format!("point {i}: g_mu exceeds g + beta mu by {:e}", gap - upper));

        let step = mu * r.random_range(0.01..2.0);
        let y = &x + &gaussian(&mut r, p.dim(), step);
        let lip = p.smoothing().gradient_lipschitz(mu);
        let num = linalg::dist2(p.smoothed_penalty_grad(&x, mu).view(), p.smoothed_penalty_grad(&y, mu).view());
        let den = linalg::dist2(x.view(), y.view());
        let ratio = num / (lip * den);
        best_ratio = best_ratio.max(ratio);
        report.case(ratio - 1.0 - 1e-12, || format!("point {i}: gradient ratio {ratio} exceeds lambda/mu"));
    }
    report.case(0.5 - best_ratio, || format!("largest gradient ratio {best_ratio} never approached lambda/mu"));
    Ok(report)
}

/// Descent bound `⟨d, ∇F_μ(x)⟩ < −κ²/(2L_H)‖∇F_μ(x)‖² + 1e-9` on every coarse
/// direction the runs produced.
pub fn descent_from_runs(runs: &[Solution]) -> CheckReport {
    let mut report = CheckReport::new("descent");
    for (i, sol) in runs.iter().enumerate() {
        for rep in &sol.coarse_reports {
            report.case(rep.slope - rep.bound - 1e-9, || {
                format!("run {i}, k={}: slope {:e} vs bound {:e}", rep.k, rep.slope, rep.bound)
            });
        }
    }
    report
}

/// Telescoping identity (1e-9 relative) and `t ∈ (0, 1]` for every `k ≥ 1`,
/// recomputed from the logged `η`/`α`, plus any violation the solver
/// recorded live.
pub fn bookkeeping_from_runs(runs: &[Solution]) -> CheckReport {
    let mut report = CheckReport::new("bookkeeping");
    for (i, sol) in runs.iter().enumerate() {
        for v in &sol.violations {
            report.case(1.0, || format!("run {i}: {v}"));
        }
        for w in sol.trace.windows(2) {
            let (prev, row) = (&w[0], &w[1]);
            let (Some(a0), Some(e0), Some(a1), Some(e1)) = (prev.alpha, prev.eta, row.alpha, row.eta) else {
                continue;
            };
            let lhs = a1 * a1 * e1 - a1 + 0.25 / e1;
            let rhs = a0 * a0 * e0;
            let rel = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
            report.case(rel - 1e-9, || format!("run {i}, k={}: telescoping error {rel:e}", row.k));
            let t = 1.0 / (a1 * e1);
            report.case(if t > 0.0 { t - 1.0 - 1e-12 } else { 1.0 }, || format!("run {i}, k={}: t = {t}", row.k));
            if let Some(used) = row.t {
                report.case(if used > 0.0 { used - 1.0 - 1e-12 } else { 1.0 }, || {
                    format!("run {i}, k={}: coupling weight {used}", row.k)
                });
            }
        }
    }
    report
}

/// `subgradient_residual ≤ 10ε` for every converged run.
pub fn residual_from_runs<'a>(runs: impl IntoIterator<Item = (&'a L1LeastSquares, &'a Solution, f64)>) -> Result<CheckReport> {
    let mut report = CheckReport::new("residual");
    for (i, (p, sol, eps)) in runs.into_iter().enumerate() {
        if !sol.converged {
            continue;
        }
        let res = subgradient_residual(p, &sol.x)?;
        report.case(res / (10.0 * eps) - 1.0, || {
            format!("run {i} ({}): residual {res:e} above {:e}", sol.solver, 10.0 * eps)
        });
    }
    Ok(report)
}

/// Diagonal instances with soft-threshold solutions `x_j = S(a_j b_j, λ)/a_j²`
/// solved by every solver to 1e-8.
pub fn closed_form(seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("closed-form");
    let mut r = rng(seed);
    let mut cases: Vec<(Array1<f64>, Array1<f64>, f64)> = vec![
        (array![1.0], array![2.0], 1.0),
        (array![2.0], array![-3.0], 0.5),
        (array![1.0, 0.5], array![2.0, 0.1], 0.3),
    ];
    for _ in 0..8 {
        let dim = r.random_range(1..=2);
        let diag = gaussian(&mut r, dim, 1.0).mapv(|v| v.abs() + 0.2);
        cases.push((diag, gaussian(&mut r, dim, 2.0), r.random_range(0.01..2.0)));
    }
    let cfg = SolverConfig {
        eps: 1e-12,
        max_iters: 100_000,
        ..Default::default()
    };
    for (case, (diag, b, lambda)) in cases.iter().enumerate() {
        let n = diag.len();
        let a = Array2::from_diag(diag);
        let p = L1LeastSquares::new(a, b.clone(), *lambda, false)?;
        let expected: Array1<f64> = (0..n).map(|j| soft_threshold_scalar(diag[j] * b[j], *lambda) / (diag[j] * diag[j])).collect();
        let mut configs = vec![
            (SolverKind::Ista, cfg.clone()),
            (SolverKind::Fista, cfg.clone()),
            (SolverKind::Agm, cfg.clone()),
            (SolverKind::Magma, cfg.clone()),
        ];
        if n == 2 {
            configs.push((SolverKind::Magma, SolverConfig { levels: Some(2), ..cfg.clone() }));
        }
        for (kind, c) in configs {
            let sol = solve(kind, &p, &Array1::zeros(n), &c)?;
            let err = linalg::norm_inf((&sol.x - &expected).view());
            report.case(err - 1e-8, || format!("case {case} ({kind}): error {err:e}"));
        }
    }
    Ok(report)
}

/// MAGMA runs on small correlated bucket instances, for the built-in
/// descent and bookkeeping suites.
fn magma_runs(count: usize, seed: u64, base: &SolverConfig) -> Result<Vec<Solution>> {
    let spec = ExperimentSpec {
        m: 120,
        n: 64,
        ..Default::default()
    };
    let cfg = SolverConfig {
        levels: base.levels.or(Some(3)),
        max_iters: 600,
        ..base.clone()
    };
    (0..count as u64)
        .map(|i| {
            let inst = gen_instance_seeded(&spec, seed + i)?;
            let x0 = starting_point(inst.problem.dim(), seed + i, 0);
            solve(SolverKind::Magma, &inst.problem, &x0, &cfg)
        })
        .collect()
}

/// Converged runs on well-conditioned instances for the residual oracle.
fn oracle_runs(seed: u64) -> Result<CheckReport> {
    let spec = ExperimentSpec {
        m: 60,
        n: 16,
        rho: 0.3,
        k_true: 3,
        bucket: false,
        ..Default::default()
    };
    let cfg = SolverConfig {
        eps: 1e-8,
        max_iters: 100_000,
        ..Default::default()
    };
    let mut items = Vec::new();
    for i in 0..3 {
        let inst = gen_instance_seeded(&spec, seed + i)?;
        let g = inst.problem.dictionary().apply_adjoint(inst.problem.observation());
        let p = inst.problem.with_lambda(0.1 * linalg::norm_inf(g.view()))?;
        for kind in [SolverKind::Fista, SolverKind::Agm, SolverKind::Magma] {
            let sol = solve(kind, &p, &Array1::zeros(p.dim()), &cfg)?;
            items.push((p.clone(), sol));
        }
    }
    residual_from_runs(items.iter().map(|(p, s)| (p, s, cfg.eps)))
}

/// Runs one named suite with its built-in sizes.
pub fn run_suite(name: &str) -> Result<CheckReport> {
    run_suite_with(name, &SolverConfig::default())
}

/// As [`run_suite`], with the MAGMA runs of the descent and bookkeeping
/// suites using `base` (its chain depth defaults to 3 and its budget is
/// capped at 600 iterations).
pub fn run_suite_with(name: &str, base: &SolverConfig) -> Result<CheckReport> {
    base.validate()?;
    match name {
        "coherence" => coherence(100, 1),
        "guarantees" => guarantees(200, 3),
        "smoothing" => smoothing(200, 9),
        "descent" => Ok(descent_from_runs(&magma_runs(3, 2, base)?)),
        "bookkeeping" => Ok(bookkeeping_from_runs(&magma_runs(3, 5, base)?)),
        "oracle" => {
            let mut report = closed_form(6)?;
            report.merge(oracle_runs(7)?);
            report.suite = "oracle".into();
            Ok(report)
        }
        other => Err(Error::invalid(
            "suite",
            format!("unknown suite `{other}`; expected one of {}", SUITES.join(", ")),
        )),
    }
}
