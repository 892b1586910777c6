use ndarray::Array1;

use super::{check_start, finish_unconverged, Best, RunClock, Solution, SolverConfig, SolverKind, StepKind, TraceRow};
use crate::error::Result;
use crate::linalg;
use crate::mirror::{BregmanGeometry, Euclidean};
use crate::problem::{prox_with_grad, CompositeProblem};

/// Linear coupling of a gradient step and a mirror step with
/// `α_{k+1} = (k+2)/(2L_f)` and `t_k = 2/(k+2)`.
pub fn agm<P: CompositeProblem + ?Sized>(problem: &P, x0: &Array1<f64>, config: &SolverConfig) -> Result<Solution> {
    check_start(problem, x0, config)?;
    let clock = RunClock::start();
    let l = problem.lipschitz();
    let mut y = x0.clone();
    let mut z = x0.clone();
    let mut best = Best::new(x0, problem.objective(x0));
    let mut trace = Vec::new();

    for k in 0..config.max_iters {
        let alpha = (k as f64 + 2.0) / (2.0 * l);
        let t = 2.0 / (k as f64 + 2.0);
        let x = linalg::lincomb(t, &z, 1.0 - t, &y);
        let (fx, grad) = problem.smooth_eval(&x);
        let out = prox_with_grad(problem, &x, &grad, l);
        let d = linalg::dist2(x.view(), out.point.view());
        if d < config.eps {
            let objective = fx + problem.penalty_value(&x);
            return Ok(Solution {
                solver: SolverKind::Agm,
                x,
                objective,
                grad_map_norm: d,
                iterations: k,
                converged: true,
                gradient_steps: k,
                coarse_steps: 0,
                fallback_steps: 0,
                elapsed: clock.elapsed(),
                trace,
                coarse_reports: Vec::new(),
                violations: Vec::new(),
            });
        }
        y = out.point;
        z = Euclidean.mirror_step(problem, &z, &grad, alpha);
        let fy = problem.objective(&y);
        best.offer(&y, fy);
        trace.push(TraceRow {
            k,
            step_kind: StepKind::Grad,
            objective: fy,
            grad_map_norm: d,
            eta: Some(l),
            alpha: Some(alpha),
            t: Some(t),
            s: None,
            elapsed_ns: clock.elapsed_ns(),
        });
    }

    let (x, objective, d) = finish_unconverged(problem, best, l);
    Ok(Solution {
        solver: SolverKind::Agm,
        x,
        objective,
        grad_map_norm: d,
        iterations: config.max_iters,
        converged: false,
        gradient_steps: config.max_iters,
        coarse_steps: 0,
        fallback_steps: 0,
        elapsed: clock.elapsed(),
        trace,
        coarse_reports: Vec::new(),
        violations: Vec::new(),
    })
}
