use ndarray::Array1;

use super::linesearch::armijo_backtrack;
use super::mfista::mfista;
use super::{check_start, finish_unconverged, Best, RunClock, Solution, SolverConfig, SolverKind, StepKind, TraceRow};
use crate::error::Result;
use crate::linalg::{self, LIPSCHITZ_SAFETY};
use crate::mirror::{BregmanGeometry, Euclidean};
use crate::multilevel::{build_coarse_model_with_grad, CoarseSpace, RestrictionChain};
use crate::problem::{prox_with_grad, smoothed_l1_value, CompositeProblem, L1LeastSquares, SmoothedView};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Gradient,
    Coarse,
}

/// The coupling weights `(α_k, η_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub alpha: f64,
    pub eta: f64,
}

impl StepSizes {
    /// `α₀ = 0`, `η₀ = L_f`.
    pub fn initial(l_f: f64) -> Self {
        StepSizes { alpha: 0.0, eta: l_f }
    }

    /// `t = 1/(αη)`
    pub fn t(&self) -> f64 {
        1.0 / (self.alpha * self.eta)
    }

    /// Relative error of `α'²η' − α' + 1/(4η') = α²η` going from `self` to `next`.
    pub fn telescoping_error(&self, next: &StepSizes) -> f64 {
        let lhs = next.alpha * next.alpha * next.eta - next.alpha + 0.25 / next.eta;
        let rhs = self.alpha * self.alpha * self.eta;
        (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE)
    }
}

/// Computes `(α_{k+1}, η_{k+1})` from `(α_k, η_k)`.
///
/// Iteration 0 always uses the gradient branch, giving `α₁ = 1/L_f`. Later
/// iterations use `η = L_f` on gradient steps and
/// `η = max{1/(4α_k²η_k), L_H/(c s κ²)}` on coarse steps, followed by
/// `α_{k+1} = 1/(2η) + α_k √(η_k/η)`.
pub fn update_eta_alpha(
    prev: StepSizes,
    k: usize,
    branch: Branch,
    s: f64,
    l_f: f64,
    l_h: f64,
    config: &SolverConfig,
) -> StepSizes {
    if k == 0 {
        return StepSizes {
            alpha: 1.0 / l_f,
            eta: l_f,
        };
    }
    let eta = match branch {
        Branch::Gradient => l_f,
        Branch::Coarse => {
            let from_alpha = 0.25 / (prev.alpha * prev.alpha * prev.eta);
            let from_step = l_h / (config.armijo_c * s * config.kappa * config.kappa);
            from_alpha.max(from_step)
        }
    };
    let alpha = 0.5 / eta + prev.alpha * (prev.eta / eta).sqrt();
    StepSizes { alpha, eta }
}

/// State carried between MAGMA iterations besides the iterates themselves.
#[derive(Debug, Clone)]
pub struct MagmaState {
    pub sizes: StepSizes,
    /// Point at which the last coarse correction was taken.
    pub x_tilde: Option<Array1<f64>>,
    /// Gradient correction steps since the last coarse correction.
    pub q: usize,
    /// Step size accepted by the last coarse line search.
    pub s_prev: f64,
}

impl MagmaState {
    pub fn new(l_f: f64, config: &SolverConfig) -> Self {
        MagmaState {
            sizes: StepSizes::initial(l_f),
            x_tilde: None,
            q: 0,
            s_prev: config.s0,
        }
    }
}

/// `‖R∇F_μ(x)‖ > κ‖∇F_μ(x)‖` and (no coarse step yet, or
/// `‖x − x̃‖ > ϑ‖x̃‖`, or `q < K_d`).
pub fn coarse_condition(
    chain: &RestrictionChain,
    smoothed_grad: &Array1<f64>,
    x: &Array1<f64>,
    state: &MagmaState,
    config: &SolverConfig,
) -> Result<bool> {
    let restricted = chain.restrict(smoothed_grad)?;
    crate::error::check_len("coarse condition point", chain.fine_dim(), x.len())?;
    let g = linalg::norm2(smoothed_grad.view());
    if !(linalg::norm2(restricted.view()) > config.kappa * g) {
        return Ok(false);
    }
    Ok(match &state.x_tilde {
        None => true,
        Some(xt) => {
            linalg::dist2(x.view(), xt.view()) > config.theta * linalg::norm2(xt.view()) || state.q < config.kd
        }
    })
}

/// Diagnostics for one attempted coarse correction that produced a direction.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseStepReport {
    pub k: usize,
    /// `⟨d, ∇F_μ(x_k)⟩`
    pub slope: f64,
    /// `−κ²/(2L_H)‖∇F_μ(x_k)‖²`
    pub bound: f64,
    pub grad_norm: f64,
    pub l_h: f64,
    pub coarse_initial: f64,
    pub coarse_first: f64,
    pub coarse_final: f64,
    pub coarse_iters: usize,
    /// Accepted Armijo step, `None` when the line search failed.
    pub s: Option<f64>,
}

/// `φ(s) = F_μ(x + s d)` for ℓ1 least squares in `O(m + n)` per trial, from
/// the precomputed residual `r₀ = Bx − b` and `Bd`.
struct LineFunction<'a> {
    x: &'a Array1<f64>,
    d: &'a Array1<f64>,
    r0: Array1<f64>,
    bd: Array1<f64>,
    lambda: f64,
    mu: f64,
}

impl LineFunction<'_> {
    fn value(&self, s: f64) -> f64 {
        let fit: f64 = self.r0.iter().zip(&self.bd).map(|(r, v)| (r + s * v) * (r + s * v)).sum();
        let w = linalg::lincomb(1.0, self.x, s, self.d);
        0.5 * fit + smoothed_l1_value(w.view(), self.lambda, self.mu)
    }
}

/// A point together with its residual `Bw − b`. Residuals of convex
/// combinations and line-search points are formed without touching `B`.
#[derive(Debug, Clone)]
struct Tracked {
    w: Array1<f64>,
    r: Array1<f64>,
}

impl Tracked {
    fn at(problem: &L1LeastSquares, w: Array1<f64>) -> Self {
        let r = problem.residual(&w);
        Tracked { w, r }
    }

    /// `t a + (1 − t) b`
    fn blend(t: f64, a: &Tracked, b: &Tracked) -> Self {
        Tracked {
            w: linalg::lincomb(t, &a.w, 1.0 - t, &b.w),
            r: linalg::lincomb(t, &a.r, 1.0 - t, &b.r),
        }
    }

    fn smooth(&self, problem: &L1LeastSquares) -> (f64, Array1<f64>) {
        (0.5 * self.r.dot(&self.r), problem.dictionary().apply_adjoint(&self.r))
    }

    fn objective(&self, problem: &L1LeastSquares) -> f64 {
        0.5 * self.r.dot(&self.r) + problem.penalty_value(&self.w)
    }
}

struct CoarseStep {
    x: Array1<f64>,
    grad: Array1<f64>,
    y: Tracked,
    sizes: StepSizes,
    t: f64,
    s: f64,
}

/// Multilevel accelerated gradient method for ℓ1 least squares on the coarse
/// space `space`.
pub fn magma(problem: &L1LeastSquares, space: &CoarseSpace, x0: &Array1<f64>, config: &SolverConfig) -> Result<Solution> {
    check_start(problem, x0, config)?;
    crate::error::check_len("coarse space", problem.dim(), space.chain().fine_dim())?;
    let clock = RunClock::start();
    let l_f = problem.lipschitz();
    let beta = problem.smoothing().beta();
    let chain = space.chain();
    let coarse_enabled = !chain.is_identity();

    let mut st = MagmaState::new(l_f, config);
    let mut y = Tracked::at(problem, x0.clone());
    let mut z = y.clone();
    let mut best = Best::new(x0, problem.objective(x0));
    let mut trace = Vec::new();
    let mut reports = Vec::new();
    let mut violations = Vec::new();
    let (mut n_grad, mut n_coarse, mut n_fallback) = (0, 0, 0);
    let mut last_kind = None;
    let mut k = 0;

    let converged = loop {
        if k >= config.max_iters && last_kind != Some(StepKind::Coarse) {
            break None;
        }
        let grad_sizes = update_eta_alpha(st.sizes, k, Branch::Gradient, st.s_prev, l_f, 0.0, config);
        let t_g = grad_sizes.t();
        let blended = Tracked::blend(t_g, &z, &y);
        let (fx_g, gf_g) = blended.smooth(problem);
        let x_g = blended.w;
        let prox_g = prox_with_grad(problem, &x_g, &gf_g, l_f);
        let d_g = linalg::dist2(x_g.view(), prox_g.point.view());
        if d_g < config.eps {
            let objective = fx_g + problem.penalty_value(&x_g);
            break Some((x_g, objective, d_g));
        }

        let mut coarse = None;
        let mut attempted = false;
        if coarse_enabled && k > 0 && k < config.max_iters {
            let mu = config.mu_at(l_f, grad_sizes.eta, grad_sizes.alpha, beta);
            let view = SmoothedView::new(problem, mu)?;
            let gmu = view.grad_from_smooth(&x_g, &gf_g);
            if coarse_condition(chain, &gmu, &x_g, &st, config)? {
                attempted = true;
                coarse = try_coarse(problem, space, &st, &y, &z, k, mu, config, &mut reports, &mut violations)?;
            }
        }

        let (kind, y_new, sizes, t, s, grad_at) = match coarse {
            Some(step) => {
                st.x_tilde = Some(step.x.clone());
                st.q = 0;
                st.s_prev = step.s;
                n_coarse += 1;
                (StepKind::Coarse, step.y, step.sizes, step.t, Some(step.s), step.grad)
            }
            None => {
                st.q += 1;
                let kind = if attempted {
                    n_fallback += 1;
                    StepKind::Fallback
                } else {
                    n_grad += 1;
                    StepKind::Grad
                };
                (kind, Tracked::at(problem, prox_g.point), grad_sizes, t_g, None, gf_g)
            }
        };

        if k >= 1 {
            let tele = st.sizes.telescoping_error(&sizes);
            if !(tele <= 1e-9) {
                violations.push(format!("k={k}: telescoping identity relative error {tele:e}"));
            }
            let t_next = sizes.t();
            if !(t_next > 0.0 && t_next <= 1.0 + 1e-12) {
                violations.push(format!("k={k}: t = {t_next} outside (0, 1]"));
            }
        }

        z = Tracked::at(problem, Euclidean.mirror_step(problem, &z.w, &grad_at, sizes.alpha));
        y = y_new;
        st.sizes = sizes;
        let fy = y.objective(problem);
        best.offer(&y.w, fy);
        trace.push(TraceRow {
            k,
            step_kind: kind,
            objective: fy,
            grad_map_norm: d_g,
            eta: Some(sizes.eta),
            alpha: Some(sizes.alpha),
            t: Some(t),
            s,
            elapsed_ns: clock.elapsed_ns(),
        });
        last_kind = Some(kind);
        k += 1;
    };

    let (x, objective, grad_map_norm, is_converged) = match converged {
        Some((x, objective, d)) => (x, objective, d, true),
        None => {
            let (x, objective, d) = finish_unconverged(problem, best, l_f);
            (x, objective, d, false)
        }
    };
    Ok(Solution {
        solver: SolverKind::Magma,
        x,
        objective,
        grad_map_norm,
        iterations: k,
        converged: is_converged,
        gradient_steps: n_grad,
        coarse_steps: n_coarse,
        fallback_steps: n_fallback,
        elapsed: clock.elapsed(),
        trace,
        coarse_reports: reports,
        violations,
    })
}

/// Re-forms `x_k` with the coarse-branch weights, re-checks the condition,
/// solves the coarse model and line-searches along the prolonged direction.
/// `None` means the caller falls back to the gradient step.
#[allow(clippy::too_many_arguments)]
fn try_coarse(
    problem: &L1LeastSquares,
    space: &CoarseSpace,
    st: &MagmaState,
    y: &Tracked,
    z: &Tracked,
    k: usize,
    mu: f64,
    config: &SolverConfig,
    reports: &mut Vec<CoarseStepReport>,
    violations: &mut Vec<String>,
) -> Result<Option<CoarseStep>> {
    let chain = space.chain();
    let l_f = problem.lipschitz();
    let mu_h = config.mu_coarse.unwrap_or(mu);
    let l_h = space.gram_norm() * LIPSCHITZ_SAFETY + problem.lambda() / mu_h;

    let provisional = update_eta_alpha(st.sizes, k, Branch::Coarse, st.s_prev, l_f, l_h, config);
    let t_c = provisional.t();
    let Tracked { w: x_c, r: r_c } = Tracked::blend(t_c, z, y);
    let (fx_c, gf_c) = (0.5 * r_c.dot(&r_c), problem.dictionary().apply_adjoint(&r_c));
    let view = SmoothedView::new(problem, mu)?;
    let gmu = view.grad_from_smooth(&x_c, &gf_c);
    if !coarse_condition(chain, &gmu, &x_c, st, config)? {
        return Ok(None);
    }

    let model = build_coarse_model_with_grad(problem, space, &x_c, &gmu, mu_h)?;
    let Ok(solve) = mfista(&model, model.anchor(), config.coarse_tol, config.coarse_max_iters) else {
        return Ok(None);
    };
    if !(solve.final_value <= solve.first_value) {
        violations.push(format!(
            "k={k}: coarse solve ended above its first iterate ({} > {})",
            solve.final_value, solve.first_value
        ));
    }
    let d = chain.prolong(&(&solve.point - model.anchor()))?;
    let slope = d.dot(&gmu);
    let grad_norm = linalg::norm2(gmu.view());
    let bound = -config.kappa * config.kappa / (2.0 * l_h) * grad_norm * grad_norm;
    if !(slope < bound + 1e-9) {
        violations.push(format!("k={k}: coarse direction slope {slope:e} above descent bound {bound:e}"));
    }

    let line = LineFunction {
        x: &x_c,
        d: &d,
        r0: r_c,
        bd: problem.dictionary().apply(&d),
        lambda: problem.lambda(),
        mu,
    };
    let phi0 = fx_c + problem.smoothed_penalty_value(&x_c, mu);
    let search = armijo_backtrack(
        |s| line.value(s),
        phi0,
        slope,
        config.s0,
        config.tau,
        config.armijo_c,
        config.max_backtracks,
    );
    reports.push(CoarseStepReport {
        k,
        slope,
        bound,
        grad_norm,
        l_h,
        coarse_initial: solve.initial_value,
        coarse_first: solve.first_value,
        coarse_final: solve.final_value,
        coarse_iters: solve.iterations,
        s: search.ok().map(|(s, _)| s),
    });
    let Ok((s, _)) = search else {
        return Ok(None);
    };

    let sizes = update_eta_alpha(st.sizes, k, Branch::Coarse, s, l_f, l_h, config);
    let y_new = Tracked {
        w: linalg::lincomb(1.0, &x_c, s, &d),
        r: linalg::lincomb(1.0, &line.r0, s, &line.bd),
    };
    Ok(Some(CoarseStep {
        x: x_c,
        grad: gf_c,
        y: y_new,
        sizes,
        t: t_c,
        s,
    }))
}
