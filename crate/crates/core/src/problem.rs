//! Composite objectives `F(x) = f(x) + g(x)` and their first-order primitives.
//!
//! All geometry is Euclidean: the primal and dual norms are both `‖·‖₂`, so
//! the gradient mapping is measured in `‖·‖₂` as well.

use ndarray::{Array1, Array2, ArrayView1, Zip};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, norm1, power_iteration, LIPSCHITZ_SAFETY, POWER_MAX_ITERS, POWER_TOL};

/// Default ℓ1 weight used by experiments and the CLI.
pub const DEFAULT_LAMBDA: f64 = 1e-6;

/// Parameters of a `(α, β, K)`-smoothable penalty with `β = β₁ + β₂`:
/// `g - β₁μ ≤ g_μ ≤ g + β₂μ` and `∇g_μ` is `(K + α/μ)`-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub k: f64,
}

impl SmoothingParams {
    pub fn beta(&self) -> f64 {
        self.beta1 + self.beta2
    }

    pub fn gradient_lipschitz(&self, mu: f64) -> f64 {
        self.k + self.alpha / mu
    }
}

/// A composite objective with a smooth part `f` and a prox-friendly part `g`.
///
/// Implementations are immutable after construction and may be shared across
/// threads.
pub trait CompositeProblem: Send + Sync {
    fn dim(&self) -> usize;

    /// `f(x)` and `∇f(x)` from a single pass over the data.
    fn smooth_eval(&self, x: &Array1<f64>) -> (f64, Array1<f64>);

    fn smooth_value(&self, x: &Array1<f64>) -> f64 {
        self.smooth_eval(x).0
    }

    fn smooth_grad(&self, x: &Array1<f64>) -> Array1<f64> {
        self.smooth_eval(x).1
    }

    fn penalty_value(&self, x: &Array1<f64>) -> f64;

    /// `argmin_y { step·g(y) + ½‖y − v‖² }`.
    fn penalty_prox(&self, v: &Array1<f64>, step: f64) -> Array1<f64>;

    /// Lipschitz constant of `∇f`.
    fn lipschitz(&self) -> f64;

    fn smoothing(&self) -> SmoothingParams;

    fn smoothed_penalty_value(&self, x: &Array1<f64>, mu: f64) -> f64;

    fn smoothed_penalty_grad(&self, x: &Array1<f64>, mu: f64) -> Array1<f64>;

    fn objective(&self, x: &Array1<f64>) -> f64 {
        self.smooth_value(x) + self.penalty_value(x)
    }
}

/// Result of one proximal-gradient subproblem at a point.
#[derive(Debug, Clone)]
pub struct ProxOutcome {
    pub point: Array1<f64>,
    /// `Prog_L(x)`, the decrease certified by the quadratic model.
    pub prog: f64,
}

/// Proximal step at `x` given a precomputed `∇f(x)`.
pub(crate) fn prox_with_grad<P: CompositeProblem + ?Sized>(
    problem: &P,
    x: &Array1<f64>,
    grad: &Array1<f64>,
    l: f64,
) -> ProxOutcome {
    let shifted = linalg::lincomb(1.0, x, -1.0 / l, grad);
    let point = problem.penalty_prox(&shifted, 1.0 / l);
    let step = &point - x;
    let model = 0.5 * l * step.dot(&step) + grad.dot(&step) + problem.penalty_value(&point)
        - problem.penalty_value(x);
    // The minimum of the model is never above its value at y = x, which is 0.
    ProxOutcome {
        point,
        prog: (-model).max(0.0),
    }
}

pub fn grad_f<P: CompositeProblem + ?Sized>(problem: &P, x: &Array1<f64>) -> Result<Array1<f64>> {
    check_len("grad_f", problem.dim(), x.len())?;
    Ok(problem.smooth_grad(x))
}

/// `argmin_y { L/2‖y−x‖² + ⟨∇f(x), y−x⟩ + g(y) }`.
pub fn prox_step<P: CompositeProblem + ?Sized>(problem: &P, x: &Array1<f64>, l: f64) -> Result<Array1<f64>> {
    check_step(l)?;
    check_len("prox_step", problem.dim(), x.len())?;
    let grad = problem.smooth_grad(x);
    Ok(prox_with_grad(problem, x, &grad, l).point)
}

pub fn prog<P: CompositeProblem + ?Sized>(problem: &P, x: &Array1<f64>, l: f64) -> Result<f64> {
    check_step(l)?;
    check_len("prog", problem.dim(), x.len())?;
    let grad = problem.smooth_grad(x);
    Ok(prox_with_grad(problem, x, &grad, l).prog)
}

/// `D(x) = x − prox_{L_f}(x)`.
pub fn gradient_mapping<P: CompositeProblem + ?Sized>(problem: &P, x: &Array1<f64>) -> Result<Array1<f64>> {
    let p = prox_step(problem, x, problem.lipschitz())?;
    Ok(x - &p)
}

fn check_step(l: f64) -> Result<()> {
    if l > 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("L", format!("step constant must be positive, got {l}")))
    }
}

/// Dense dictionary `A`, optionally augmented with an implicit identity block
/// to form `B = [A, I]` acting on `w = [x; e]`.
#[derive(Debug, Clone)]
pub struct Dictionary {
    a: Array2<f64>,
    at: Array2<f64>,
    bucket: bool,
}

impl Dictionary {
    pub fn new(a: Array2<f64>, bucket: bool) -> Self {
        let at = a.t().as_standard_layout().into_owned();
        Dictionary { a, at, bucket }
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    /// Number of columns of `A` (the x-block length).
    pub fn atoms(&self) -> usize {
        self.a.ncols()
    }

    pub fn is_bucket(&self) -> bool {
        self.bucket
    }

    pub fn dim(&self) -> usize {
        self.atoms() + if self.bucket { self.rows() } else { 0 }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.a
    }

    /// `B w`
    pub fn apply(&self, w: &Array1<f64>) -> Array1<f64> {
        let n = self.atoms();
        let mut out = self.a.dot(&w.slice(ndarray::s![..n]));
        if self.bucket {
            out += &w.slice(ndarray::s![n..]);
        }
        out
    }

    /// `Bᵀ r`, computed blockwise as `[Aᵀr; r]` for bucket dictionaries.
    pub fn apply_adjoint(&self, r: &Array1<f64>) -> Array1<f64> {
        let ar = self.at.dot(r);
        if self.bucket {
            let mut out = Array1::zeros(self.dim());
            out.slice_mut(ndarray::s![..self.atoms()]).assign(&ar);
            out.slice_mut(ndarray::s![self.atoms()..]).assign(r);
            out
        } else {
            ar
        }
    }

    /// Power-iteration estimate of `‖BᵀB‖₂` without the safety factor.
    /// For bucket dictionaries this is `‖A‖₂² + 1`.
    pub fn gram_norm(&self) -> Result<f64> {
        let est = power_iteration(
            |v| self.at.dot(&self.a.dot(v)),
            self.atoms(),
            POWER_TOL,
            POWER_MAX_ITERS,
        )?;
        Ok(est.value + if self.bucket { 1.0 } else { 0.0 })
    }
}

/// `½‖Bw − b‖² + λ‖w‖₁`, with `B = A` or `B = [A, I]`.
#[derive(Debug, Clone)]
pub struct L1LeastSquares {
    dict: Dictionary,
    b: Array1<f64>,
    lambda: f64,
    lipschitz: f64,
}

impl L1LeastSquares {
    /// Builds the instance and estimates `L_f` by power iteration.
    pub fn new(a: Array2<f64>, b: Array1<f64>, lambda: f64, bucket: bool) -> Result<Self> {
        let mut p = Self::with_lipschitz(a, b, lambda, bucket, 1.0)?;
        p.lipschitz = lipschitz_estimate(&p)?;
        Ok(p)
    }

    /// Builds the instance with a caller-supplied Lipschitz constant.
    pub fn with_lipschitz(a: Array2<f64>, b: Array1<f64>, lambda: f64, bucket: bool, lipschitz: f64) -> Result<Self> {
        check_len("observation vector", a.nrows(), b.len())?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::invalid("lipschitz", format!("must be positive, got {lipschitz}")));
        }
        Ok(L1LeastSquares {
            dict: Dictionary::new(a, bucket),
            b,
            lambda,
            lipschitz,
        })
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn observation(&self) -> &Array1<f64> {
        &self.b
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_bucket(&self) -> bool {
        self.dict.is_bucket()
    }

    /// `Bw − b`
    pub fn residual(&self, w: &Array1<f64>) -> Array1<f64> {
        let mut r = self.dict.apply(w);
        r -= &self.b;
        r
    }

    /// Same problem with a different `λ`; the Lipschitz constant carries over.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
        }
        let mut p = self.clone();
        p.lambda = lambda;
        Ok(p)
    }
}

impl CompositeProblem for L1LeastSquares {
    fn dim(&self) -> usize {
        self.dict.dim()
    }

    fn smooth_eval(&self, x: &Array1<f64>) -> (f64, Array1<f64>) {
        let r = self.residual(x);
        (0.5 * r.dot(&r), self.dict.apply_adjoint(&r))
    }

    fn smooth_value(&self, x: &Array1<f64>) -> f64 {
        let r = self.residual(x);
        0.5 * r.dot(&r)
    }

    fn penalty_value(&self, x: &Array1<f64>) -> f64 {
        self.lambda * norm1(x.view())
    }

    fn penalty_prox(&self, v: &Array1<f64>, step: f64) -> Array1<f64> {
        linalg::soft_threshold(v.view(), self.lambda * step)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn smoothing(&self) -> SmoothingParams {
        SmoothingParams {
            alpha: self.lambda,
            beta1: 0.0,
            beta2: self.lambda * self.dim() as f64,
            k: 0.0,
        }
    }

    fn smoothed_penalty_value(&self, x: &Array1<f64>, mu: f64) -> f64 {
        smoothed_l1_value(x.view(), self.lambda, mu)
    }

    fn smoothed_penalty_grad(&self, x: &Array1<f64>, mu: f64) -> Array1<f64> {
        smoothed_l1_grad(x.view(), self.lambda, mu)
    }
}

/// `λ Σ √(μ² + x_j²)`
pub fn smoothed_l1_value(x: ArrayView1<f64>, lambda: f64, mu: f64) -> f64 {
    let mu2 = mu * mu;
    lambda * x.iter().map(|&v| (mu2 + v * v).sqrt()).sum::<f64>()
}

/// Elementwise `λ x_j / √(μ² + x_j²)`.
pub fn smoothed_l1_grad(x: ArrayView1<f64>, lambda: f64, mu: f64) -> Array1<f64> {
    let mu2 = mu * mu;
    x.mapv(|v| lambda * v / (mu2 + v * v).sqrt())
}

/// `f(x) = ½xᵀQx − cᵀx` with `g ≡ 0`. `Q` must be symmetric positive semidefinite.
#[derive(Debug, Clone)]
pub struct SmoothQuadratic {
    q: Array2<f64>,
    c: Array1<f64>,
    lipschitz: f64,
}

impl SmoothQuadratic {
    pub fn new(q: Array2<f64>, c: Array1<f64>) -> Result<Self> {
        check_len("quadratic rows", q.ncols(), q.nrows())?;
        check_len("quadratic linear term", q.nrows(), c.len())?;
        let est = power_iteration(|v| q.dot(v), q.nrows(), POWER_TOL, POWER_MAX_ITERS)?;
        let lipschitz = (est.value * LIPSCHITZ_SAFETY).max(f64::MIN_POSITIVE);
        Ok(SmoothQuadratic { q, c, lipschitz })
    }

    pub fn with_lipschitz(q: Array2<f64>, c: Array1<f64>, lipschitz: f64) -> Result<Self> {
        check_len("quadratic rows", q.ncols(), q.nrows())?;
        check_len("quadratic linear term", q.nrows(), c.len())?;
        Ok(SmoothQuadratic { q, c, lipschitz })
    }
}

impl CompositeProblem for SmoothQuadratic {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn smooth_eval(&self, x: &Array1<f64>) -> (f64, Array1<f64>) {
        let qx = self.q.dot(x);
        let value = 0.5 * x.dot(&qx) - self.c.dot(x);
        (value, qx - &self.c)
    }

    fn penalty_value(&self, _x: &Array1<f64>) -> f64 {
        0.0
    }

    fn penalty_prox(&self, v: &Array1<f64>, _step: f64) -> Array1<f64> {
        v.clone()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn smoothing(&self) -> SmoothingParams {
        SmoothingParams {
            alpha: 0.0,
            beta1: 0.0,
            beta2: 0.0,
            k: 0.0,
        }
    }

    fn smoothed_penalty_value(&self, _x: &Array1<f64>, _mu: f64) -> f64 {
        0.0
    }

    fn smoothed_penalty_grad(&self, x: &Array1<f64>, _mu: f64) -> Array1<f64> {
        Array1::zeros(x.len())
    }
}

/// A differentiable objective with a known gradient Lipschitz constant.
pub trait SmoothObjective {
    fn dim(&self) -> usize;

    fn value(&self, x: &Array1<f64>) -> f64;

    fn value_and_grad(&self, x: &Array1<f64>) -> (f64, Array1<f64>);

    fn grad(&self, x: &Array1<f64>) -> Array1<f64> {
        self.value_and_grad(x).1
    }

    fn lipschitz(&self) -> f64;
}

/// `F_μ = f + g_μ` over a borrowed problem.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedView<'a, P: ?Sized> {
    problem: &'a P,
    mu: f64,
}

impl<'a, P: CompositeProblem + ?Sized> SmoothedView<'a, P> {
    pub fn new(problem: &'a P, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid("mu", format!("smoothing level must be positive, got {mu}")));
        }
        Ok(SmoothedView { problem, mu })
    }

    pub fn problem(&self) -> &'a P {
        self.problem
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn value(&self, x: &Array1<f64>) -> f64 {
        self.problem.smooth_value(x) + self.problem.smoothed_penalty_value(x, self.mu)
    }

    pub fn grad(&self, x: &Array1<f64>) -> Array1<f64> {
        self.value_and_grad(x).1
    }

    pub fn value_and_grad(&self, x: &Array1<f64>) -> (f64, Array1<f64>) {
        let (fv, mut g) = self.problem.smooth_eval(x);
        g += &self.problem.smoothed_penalty_grad(x, self.mu);
        (fv + self.problem.smoothed_penalty_value(x, self.mu), g)
    }

    /// Smoothed gradient given an already computed `∇f(x)`.
    pub(crate) fn grad_from_smooth(&self, x: &Array1<f64>, grad_f: &Array1<f64>) -> Array1<f64> {
        let mut g = self.problem.smoothed_penalty_grad(x, self.mu);
        Zip::from(&mut g).and(grad_f).for_each(|a, &b| *a += b);
        g
    }

    /// Lipschitz constant of `∇F_μ`: `L_f + K + α/μ`.
    pub fn lipschitz(&self) -> f64 {
        self.problem.lipschitz() + self.problem.smoothing().gradient_lipschitz(self.mu)
    }
}

impl<P: CompositeProblem + ?Sized> SmoothObjective for SmoothedView<'_, P> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        SmoothedView::value(self, x)
    }

    fn value_and_grad(&self, x: &Array1<f64>) -> (f64, Array1<f64>) {
        SmoothedView::value_and_grad(self, x)
    }

    fn lipschitz(&self) -> f64 {
        SmoothedView::lipschitz(self)
    }
}

pub fn smoothed_value<P: CompositeProblem + ?Sized>(view: &SmoothedView<'_, P>, x: &Array1<f64>) -> Result<f64> {
    check_len("smoothed_value", view.problem.dim(), x.len())?;
    Ok(view.value(x))
}

pub fn smoothed_grad<P: CompositeProblem + ?Sized>(view: &SmoothedView<'_, P>, x: &Array1<f64>) -> Result<Array1<f64>> {
    check_len("smoothed_grad", view.problem.dim(), x.len())?;
    Ok(view.grad(x))
}

/// `‖BᵀB‖₂` by power iteration, inflated by [`LIPSCHITZ_SAFETY`].
pub fn lipschitz_estimate(problem: &L1LeastSquares) -> Result<f64> {
    Ok(problem.dict.gram_norm()? * LIPSCHITZ_SAFETY)
}
