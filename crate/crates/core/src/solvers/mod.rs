//! First-order solvers: ISTA, FISTA, AGM, monotone FISTA (coarse-level
//! solver) and the multilevel accelerated method MAGMA.

mod agm;
mod config;
mod fista;
mod ista;
mod linesearch;
mod magma;
mod mfista;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

pub use agm::agm;
pub use config::{Backtracking, MuSchedule, SolverConfig};
pub use fista::fista;
pub use ista::ista;
pub use linesearch::{armijo_backtrack, armijo_search, LineSearchFailure};
pub use magma::{coarse_condition, magma, update_eta_alpha, Branch, CoarseStepReport, MagmaState, StepSizes};
pub use mfista::{mfista, CoarseSolve, CoarseUnavailable};

use crate::error::{check_len, Error, Result};
use crate::multilevel::{CoarseSpace, RestrictionChain};
use crate::problem::{prox_with_grad, CompositeProblem, L1LeastSquares};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Ista,
    Fista,
    Agm,
    Magma,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Ista, SolverKind::Fista, SolverKind::Agm, SolverKind::Magma];

    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Ista => "ista",
            SolverKind::Fista => "fista",
            SolverKind::Agm => "agm",
            SolverKind::Magma => "magma",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ista" => Ok(SolverKind::Ista),
            "fista" => Ok(SolverKind::Fista),
            "agm" => Ok(SolverKind::Agm),
            "magma" => Ok(SolverKind::Magma),
            other => Err(Error::invalid("solver", format!("unknown solver `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Grad,
    Coarse,
    Fallback,
}

/// One row of the per-iteration trace.
///
/// `objective` is `F` at the newest main iterate produced in iteration `k`;
/// `grad_map_norm` is `‖D‖₂` at the point where the stopping test ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub step_kind: StepKind,
    pub objective: f64,
    pub grad_map_norm: f64,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub t: Option<f64>,
    pub s: Option<f64>,
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub solver: SolverKind,
    pub x: Array1<f64>,
    pub objective: f64,
    pub grad_map_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_steps: usize,
    pub coarse_steps: usize,
    pub fallback_steps: usize,
    pub elapsed: Duration,
    pub trace: Vec<TraceRow>,
    /// Per coarse step diagnostics (MAGMA only).
    pub coarse_reports: Vec<CoarseStepReport>,
    /// Live invariant violations observed during the run.
    pub violations: Vec<String>,
}

/// Runs `kind` on an ℓ1 least-squares instance. MAGMA builds its chain from
/// `config.levels`.
pub fn solve(kind: SolverKind, problem: &L1LeastSquares, x0: &Array1<f64>, config: &SolverConfig) -> Result<Solution> {
    match kind {
        SolverKind::Ista => ista(problem, x0, config),
        SolverKind::Fista => fista(problem, x0, config),
        SolverKind::Agm => agm(problem, x0, config),
        SolverKind::Magma => {
            let levels = config.resolved_levels(problem.dictionary().atoms());
            let chain = RestrictionChain::for_problem(problem, levels)?;
            let space = CoarseSpace::new(problem, chain)?;
            magma(problem, &space, x0, config)
        }
    }
}

/// Tracks the lowest-objective iterate seen so far.
pub(crate) struct Best {
    pub x: Array1<f64>,
    pub objective: f64,
}

impl Best {
    pub fn new(x: &Array1<f64>, objective: f64) -> Self {
        Best { x: x.clone(), objective }
    }

    pub fn offer(&mut self, x: &Array1<f64>, objective: f64) {
        if objective < self.objective {
            self.objective = objective;
            self.x.assign(x);
        }
    }
}

pub(crate) struct RunClock {
    start: Instant,
}

impl RunClock {
    pub fn start() -> Self {
        RunClock { start: Instant::now() }
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    pub fn elapsed_ns(&self) -> u64 {
        self.start.elapsed().as_nanos() as u64
    }
}

pub(crate) fn check_start<P: CompositeProblem + ?Sized>(problem: &P, x0: &Array1<f64>, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    check_len("starting point", problem.dim(), x0.len())
}

/// Finishes an unconverged run: report the best iterate and its gradient
/// mapping at `L_f`.
pub(crate) fn finish_unconverged<P: CompositeProblem + ?Sized>(problem: &P, best: Best, l: f64) -> (Array1<f64>, f64, f64) {
    let grad = problem.smooth_grad(&best.x);
    let p = prox_with_grad(problem, &best.x, &grad, l).point;
    let d = crate::linalg::dist2(best.x.view(), p.view());
    (best.x, best.objective, d)
}
