//! Acceptance criteria 1 through 9. Prints one PASS/FAIL line per criterion
//! and exits nonzero when a gating criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use magma_core::checks::{self, CheckReport};
use magma_core::harness::{gen_instance_seeded, starting_point, ExperimentSpec};
use magma_core::linalg::{dist2, norm_inf};
use magma_core::problem::{CompositeProblem, L1LeastSquares};
use magma_core::solvers::{MuSchedule, Solution};
use magma_core::{solve, SolverConfig, SolverKind};
use ndarray::Array1;

const NON_GATING: [usize; 3] = [4, 6, 8];

struct Outcome {
    id: usize,
    passed: bool,
    summary: String,
    details: Vec<String>,
}

/// Runs gathered for the suite-wide bookkeeping and residual criteria.
struct Pool {
    bookkeeping: CheckReport,
    residual: CheckReport,
    runs: usize,
}

impl Pool {
    fn add(&mut self, p: &L1LeastSquares, sol: &Solution, eps: f64) {
        self.runs += 1;
        self.bookkeeping.merge(checks::bookkeeping_from_runs(std::slice::from_ref(sol)));
        let res = checks::residual_from_runs([(p, sol, eps)]).expect("residual evaluation");
        self.residual.merge(res);
    }
}

fn relative_lambda(p: &L1LeastSquares, rel: f64) -> f64 {
    rel * norm_inf(p.dictionary().apply_adjoint(p.observation()).view())
}

fn desk_spec(m: usize, n: usize) -> ExperimentSpec {
    ExperimentSpec {
        m,
        n,
        rho: 0.9,
        bucket: true,
        ..Default::default()
    }
}

fn report_outcome(id: usize, report: &CheckReport, extra: String) -> Outcome {
    let mut details = vec![format!("{} cases, {} failures, worst excess {:.3e}", report.cases, report.failures, report.worst)];
    if let Some(first) = &report.first_failure {
        details.push(format!("first failure: {first}"));
    }
    Outcome {
        id,
        passed: report.passed(),
        summary: extra,
        details,
    }
}

fn c1() -> Outcome {
    let start = Instant::now();
    let report = checks::coherence(100, 11).expect("coherence suite");
    let elapsed = start.elapsed();
    let mut out = report_outcome(1, &report, format!("coherence on 100 pairs in {:.2}s", elapsed.as_secs_f64()));
    out.passed &= elapsed < Duration::from_secs(10);
    out
}

fn c2(pool: &mut Pool) -> Outcome {
    let spec = desk_spec(400, 256);
    let cfg = SolverConfig {
        max_iters: 100_000,
        ..Default::default()
    };
    let mut report = CheckReport::new("descent");
    let mut coarse_steps = 0;
    for seed in 0..20 {
        let inst = gen_instance_seeded(&spec, 2000 + seed).expect("instance");
        let x0 = starting_point(inst.problem.dim(), 2000 + seed, 0);
        let sol = solve(SolverKind::Magma, &inst.problem, &x0, &cfg).expect("magma run");
        coarse_steps += sol.coarse_reports.len();
        report.merge(checks::descent_from_runs(std::slice::from_ref(&sol)));
        pool.add(&inst.problem, &sol, cfg.eps);
    }
    report_outcome(2, &report, format!("descent bound on {coarse_steps} coarse directions over 20 runs"))
}

fn c3() -> Outcome {
    let report = checks::guarantees(200, 13).expect("guarantee suite");
    report_outcome(3, &report, "gradient and mirror descent guarantees on 200 points each".into())
}

fn c4(pool: &mut Pool) -> Outcome {
    let start = Instant::now();
    let spec = desk_spec(200, 128);
    let horizon = 2_000;
    let zeta = 1.0;
    let mut report = CheckReport::new("rate");
    let mut details = Vec::new();
    let mut worst_magma = f64::NEG_INFINITY;
    let mut worst_agm = f64::NEG_INFINITY;
    let (mut potential_rows, mut potential_fails, mut min_growth) = (0usize, 0usize, f64::INFINITY);
    for seed in 0..10 {
        let inst = gen_instance_seeded(&spec, 4000 + seed).expect("instance");
        let p = inst.problem.with_lambda(relative_lambda(&inst.problem, 0.1)).expect("lambda");
        let reference_cfg = SolverConfig {
            eps: 1e-12,
            max_iters: 1_000_000,
            ..Default::default()
        };
        let reference = solve(SolverKind::Fista, &p, &Array1::zeros(p.dim()), &reference_cfg).expect("reference run");
        pool.add(&p, &reference, reference_cfg.eps);
        if !reference.converged {
            report_failure(&mut report, format!("instance {seed}: reference run did not reach 1e-12"));
            continue;
        }
        let f_star = reference.objective;
        let x0 = starting_point(p.dim(), 4000 + seed, 0);
        let theta = 0.5 * dist2(x0.view(), reference.x.view()).powi(2);
        let l_f = p.lipschitz();

        let cfg = SolverConfig {
            eps: 1e-9,
            max_iters: horizon,
            mu: MuSchedule::Theoretical { zeta },
            ..Default::default()
        };
        let magma = solve(SolverKind::Magma, &p, &x0, &cfg).expect("magma run");
        for row in &magma.trace {
            let t = (row.k + 1) as f64;
            if t < 2.0 {
                continue;
            }
            let bound = 4.0 * l_f * (theta + zeta) / ((t + 1.0) * (t + 1.0));
            let excess = (row.objective - f_star - bound) / bound;
            worst_magma = worst_magma.max(excess);
            if let (Some(alpha), Some(eta)) = (row.alpha, row.eta) {
                let a2e = alpha * alpha * eta;
                min_growth = min_growth.min(a2e * 4.0 * l_f / ((t + 1.0) * (t + 1.0)));
                potential_rows += 1;
                if row.objective - f_star > (theta + zeta) / a2e * (1.0 + 1e-9) {
                    potential_fails += 1;
                }
            }
            if excess > 0.0 {
                report_failure(&mut report, format!("instance {seed}, MAGMA T={t}: gap {:e} bound {bound:e}", row.objective - f_star));
            } else {
                report.cases += 1;
            }
        }
        pool.add(&p, &magma, cfg.eps);

        let agm = solve(SolverKind::Agm, &p, &x0, &cfg).expect("agm run");
        for row in &agm.trace {
            let t = (row.k + 1) as f64;
            let bound = 4.0 * theta * l_f / (t * t);
            let excess = (row.objective - f_star - bound) / bound;
            worst_agm = worst_agm.max(excess);
            if excess > 0.0 {
                report_failure(&mut report, format!("instance {seed}, AGM T={t}: gap {:e} bound {bound:e}", row.objective - f_star));
            } else {
                report.cases += 1;
            }
        }
        pool.add(&p, &agm, cfg.eps);
        details.push(format!(
            "instance {seed}: reference {} iters, MAGMA {} iters ({} coarse), AGM {} iters",
            reference.iterations, magma.iterations, magma.coarse_steps, agm.iterations
        ));
    }
    let elapsed = start.elapsed();
    let mut out = report_outcome(
        4,
        &report,
        format!("rate bounds on 10 instances in {:.1}s", elapsed.as_secs_f64()),
    );
    out.details.push(format!("largest relative excess: MAGMA {worst_magma:.3e}, AGM {worst_agm:.3e}"));
    out.details.push(format!(
        "MAGMA potential bound (theta+zeta)/(alpha_T^2 eta_T): {potential_fails} failures on {potential_rows} rows; \
         smallest alpha_T^2 eta_T relative to (T+1)^2/(4 L_f): {min_growth:.3e}"
    ));
    out.details.extend(details);
    out.passed &= elapsed < Duration::from_secs(120);
    out
}

fn report_failure(report: &mut CheckReport, what: String) {
    report.cases += 1;
    report.failures += 1;
    if report.first_failure.is_none() {
        report.first_failure = Some(what);
    }
}

fn c6_closed_form() -> CheckReport {
    checks::closed_form(16).expect("closed-form suite")
}

fn c7(pool: &mut Pool) -> Outcome {
    let spec = desk_spec(200, 128);
    let base = SolverConfig {
        max_iters: 20_000,
        ..Default::default()
    };
    let mut worst = 0.0_f64;
    let mut report = CheckReport::new("reduction");
    for seed in 0..5 {
        let inst = gen_instance_seeded(&spec, 7000 + seed).expect("instance");
        let p = &inst.problem;
        let x0 = starting_point(p.dim(), 7000 + seed, 0);
        let agm = solve(SolverKind::Agm, p, &x0, &base).expect("agm run");
        let magma_cfg = SolverConfig {
            levels: Some(1),
            kappa: 1.0,
            ..base.clone()
        };
        let magma = solve(SolverKind::Magma, p, &x0, &magma_cfg).expect("magma run");
        if agm.trace.len() != magma.trace.len() {
            report_failure(
                &mut report,
                format!("instance {seed}: trace lengths {} vs {}", agm.trace.len(), magma.trace.len()),
            );
        }
        let dev = agm
            .trace
            .iter()
            .zip(&magma.trace)
            .map(|(a, m)| (a.objective - m.objective).abs())
            .fold(0.0_f64, f64::max);
        worst = worst.max(dev);
        if dev > 1e-10 {
            report_failure(&mut report, format!("instance {seed}: objective deviation {dev:e}"));
        } else {
            report.cases += 1;
        }
        pool.add(p, &agm, base.eps);
        pool.add(p, &magma, base.eps);
    }
    let mut out = report_outcome(7, &report, "levels=1, kappa=1 MAGMA against AGM on 5 instances".into());
    out.details.push(format!("max objective deviation {worst:.3e}"));
    out
}

fn c8(pool: &mut Pool) -> Outcome {
    let spec = ExperimentSpec {
        lambda: 1e-6,
        ..desk_spec(2000, 1024)
    };
    let cfg = SolverConfig {
        eps: 1e-6,
        max_iters: 100_000,
        ..Default::default()
    };
    let mut ratios = Vec::new();
    let mut details = Vec::new();
    let mut all_converged = true;
    for seed in 0..10 {
        let inst = gen_instance_seeded(&spec, 8000 + seed).expect("instance");
        let p = &inst.problem;
        let x0 = starting_point(p.dim(), 8000 + seed, 0);
        let fista = solve(SolverKind::Fista, p, &x0, &cfg).expect("fista run");
        let magma = solve(SolverKind::Magma, p, &x0, &cfg).expect("magma run");
        all_converged &= fista.converged && magma.converged;
        let ratio = fista.elapsed.as_secs_f64() / magma.elapsed.as_secs_f64();
        ratios.push(ratio);
        details.push(format!(
            "seed {seed}: FISTA {:.2}s ({} iters), MAGMA {:.2}s ({} iters, {} coarse, {} fallback), ratio {ratio:.3}",
            fista.elapsed.as_secs_f64(),
            fista.iterations,
            magma.elapsed.as_secs_f64(),
            magma.iterations,
            magma.coarse_steps,
            magma.fallback_steps
        ));
        pool.add(p, &fista, cfg.eps);
        pool.add(p, &magma, cfg.eps);
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = 0.5 * (sorted[4] + sorted[5]);
    details.push(format!("ratios sorted: {:?}", sorted.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()));
    Outcome {
        id: 8,
        passed: all_converged && median >= 1.0,
        summary: format!("median FISTA/MAGMA time ratio {median:.3} over 10 seeds (m=2000, n=1024)"),
        details,
    }
}

fn c9() -> Outcome {
    let report = checks::smoothing(200, 19).expect("smoothing suite");
    report_outcome(9, &report, "smoothing sandwich and gradient Lipschitz bound on 200 points".into())
}

fn main() -> ExitCode {
    let total = Instant::now();
    let mut pool = Pool {
        bookkeeping: CheckReport::new("bookkeeping"),
        residual: CheckReport::new("residual"),
        runs: 0,
    };
    let mut outcomes = Vec::new();
    let mut step = |o: Outcome| {
        eprintln!("criterion {} evaluated after {:.1}s", o.id, total.elapsed().as_secs_f64());
        outcomes.push(o);
    };
    step(c1());
    step(c2(&mut pool));
    step(c3());
    step(c4(&mut pool));
    step(c7(&mut pool));
    step(c8(&mut pool));
    step(c9());

    let runs = pool.runs;
    outcomes.push(report_outcome(
        5,
        &pool.bookkeeping,
        format!("telescoping identity and t in (0, 1] across {runs} runs"),
    ));
    let closed = c6_closed_form();
    let mut c6 = report_outcome(6, &pool.residual, format!("subgradient residual on converged runs out of {runs}, plus closed forms"));
    c6.details.push(format!("closed forms: {} cases, {} failures", closed.cases, closed.failures));
    if let Some(first) = &closed.first_failure {
        c6.details.push(format!("closed-form failure: {first}"));
    }
    c6.passed &= closed.passed();
    outcomes.push(c6);
    outcomes.sort_by_key(|o| o.id);

    let mut gating_failed = false;
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        let tag = if NON_GATING.contains(&o.id) { " (non-gating)" } else { "" };
        println!("criterion {}: {status}{tag} {}", o.id, o.summary);
        for d in &o.details {
            println!("    {d}");
        }
        gating_failed |= !o.passed && !NON_GATING.contains(&o.id);
    }
    println!("acceptance finished in {:.1}s", total.elapsed().as_secs_f64());
    if gating_failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
