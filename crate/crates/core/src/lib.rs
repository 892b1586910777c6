//! Accelerated multilevel proximal methods for composite convex problems
//! `min F(x) = f(x) + g(x)`, with ℓ1-regularized least squares (optionally
//! in the bucket form `B = [A, I]`) as the concrete instance.

pub mod checks;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod mirror;
pub mod multilevel;
pub mod problem;
pub mod solvers;

pub use error::{Error, Result};
pub use mirror::{bregman, mirror_step, BregmanGeometry, Euclidean};
pub use multilevel::{build_chain, build_coarse_model, CoarseModel, CoarseSpace, RestrictionChain};
pub use problem::{
    grad_f, gradient_mapping, lipschitz_estimate, prog, prox_step, smoothed_grad, smoothed_value, CompositeProblem,
    Dictionary, L1LeastSquares, SmoothObjective, SmoothQuadratic, SmoothedView,
};
pub use solvers::{solve, Solution, SolverConfig, SolverKind, StepKind, TraceRow};
