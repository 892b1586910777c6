use ndarray::Array1;

use super::{check_start, finish_unconverged, Backtracking, Best, RunClock, Solution, SolverConfig, SolverKind, StepKind, TraceRow};
use crate::error::Result;
use crate::linalg;
use crate::problem::{prox_with_grad, CompositeProblem, ProxOutcome};

/// Proximal step at `x` with constant `l`, grown geometrically until
/// `F(p) ≤ F(x) − Prog_L(x)` when backtracking is enabled.
pub(crate) fn prox_search<P: CompositeProblem + ?Sized>(
    problem: &P,
    x: &Array1<f64>,
    fx: f64,
    grad: &Array1<f64>,
    mut l: f64,
    backtracking: Option<Backtracking>,
) -> (ProxOutcome, f64) {
    let Some(bt) = backtracking else {
        return (prox_with_grad(problem, x, grad, l), l);
    };
    let big_f = fx + problem.penalty_value(x);
    let slack = 4.0 * f64::EPSILON * (big_f.abs() + 1.0);
    loop {
        let out = prox_with_grad(problem, x, grad, l);
        if out.prog == 0.0 || problem.objective(&out.point) <= big_f - out.prog + slack || l >= f64::MAX / bt.growth {
            return (out, l);
        }
        l *= bt.growth;
    }
}

pub(crate) fn initial_l<P: CompositeProblem + ?Sized>(problem: &P, config: &SolverConfig) -> f64 {
    config.backtracking.map_or(problem.lipschitz(), |bt| bt.l0)
}

/// Proximal gradient method `x_{k+1} = prox_L(x_k)`.
pub fn ista<P: CompositeProblem + ?Sized>(problem: &P, x0: &Array1<f64>, config: &SolverConfig) -> Result<Solution> {
    check_start(problem, x0, config)?;
    let clock = RunClock::start();
    let mut l = initial_l(problem, config);
    let mut x = x0.clone();
    let mut best = Best::new(&x, problem.objective(&x));
    let mut trace = Vec::new();

    for k in 0..config.max_iters {
        let (fx, grad) = problem.smooth_eval(&x);
        let (out, l_new) = prox_search(problem, &x, fx, &grad, l, config.backtracking);
        l = l_new;
        let d = linalg::dist2(x.view(), out.point.view());
        if d < config.eps {
            let objective = fx + problem.penalty_value(&x);
            return Ok(Solution {
                solver: SolverKind::Ista,
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
        x = out.point;
        let fnew = problem.objective(&x);
        best.offer(&x, fnew);
        trace.push(TraceRow {
            k,
            step_kind: StepKind::Grad,
            objective: fnew,
            grad_map_norm: d,
            eta: None,
            alpha: None,
            t: None,
            s: None,
            elapsed_ns: clock.elapsed_ns(),
        });
    }

    let (x, objective, d) = finish_unconverged(problem, best, l);
    Ok(Solution {
        solver: SolverKind::Ista,
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
