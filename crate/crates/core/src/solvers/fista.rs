use ndarray::Array1;

use super::ista::{initial_l, prox_search};
use super::{check_start, finish_unconverged, Best, RunClock, Solution, SolverConfig, SolverKind, StepKind, TraceRow};
use crate::error::Result;
use crate::linalg;
use crate::problem::CompositeProblem;

/// Accelerated proximal gradient with the `t_{k+1} = (1 + √(1 + 4t_k²))/2`
/// momentum sequence. The stopping test runs at the extrapolated point `y_k`,
/// which is also what gets returned on convergence.
pub fn fista<P: CompositeProblem + ?Sized>(problem: &P, x0: &Array1<f64>, config: &SolverConfig) -> Result<Solution> {
    check_start(problem, x0, config)?;
    let clock = RunClock::start();
    let mut l = initial_l(problem, config);
    let mut x_prev = x0.clone();
    let mut y = x0.clone();
    let mut t = 1.0_f64;
    let mut best = Best::new(x0, problem.objective(x0));
    let mut trace = Vec::new();

    for k in 0..config.max_iters {
        let (fy, grad) = problem.smooth_eval(&y);
        let (out, l_new) = prox_search(problem, &y, fy, &grad, l, config.backtracking);
        l = l_new;
        let d = linalg::dist2(y.view(), out.point.view());
        if d < config.eps {
            let objective = fy + problem.penalty_value(&y);
            return Ok(Solution {
                solver: SolverKind::Fista,
                x: y,
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
        let x = out.point;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        y = &x + &((&x - &x_prev) * momentum);
        let fx = problem.objective(&x);
        best.offer(&x, fx);
        trace.push(TraceRow {
            k,
            step_kind: StepKind::Grad,
            objective: fx,
            grad_map_norm: d,
            eta: None,
            alpha: None,
            t: Some(t),
            s: None,
            elapsed_ns: clock.elapsed_ns(),
        });
        x_prev = x;
        t = t_next;
    }

    let (x, objective, d) = finish_unconverged(problem, best, l);
    Ok(Solution {
        solver: SolverKind::Fista,
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
