use crate::error::{Error, Result};
use crate::multilevel::max_depth;

/// Smoothing parameter schedule for the MAGMA line search and coarse model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuSchedule {
    Fixed(f64),
    /// `μ_k = ζ / ((L_f + η_k) α_k² β T)` with `T = max_iters`.
    Theoretical { zeta: f64 },
}

/// Adaptive estimation of `L` for ISTA/FISTA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backtracking {
    pub l0: f64,
    pub growth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub eps: f64,
    pub max_iters: usize,
    pub kappa: f64,
    pub theta: f64,
    pub kd: usize,
    pub armijo_c: f64,
    pub tau: f64,
    pub s0: f64,
    pub max_backtracks: usize,
    pub mu: MuSchedule,
    /// Coarse smoothing `μ_H`; `None` reuses the fine value.
    pub mu_coarse: Option<f64>,
    pub coarse_tol: f64,
    pub coarse_max_iters: usize,
    /// Chain depth counting the fine level. `None` picks the deepest chain
    /// whose coarse block still has at least two coordinates.
    pub levels: Option<usize>,
    pub backtracking: Option<Backtracking>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps: 1e-6,
            max_iters: 10_000,
            kappa: 0.8,
            theta: 0.5,
            kd: 30,
            armijo_c: 1e-4,
            tau: 0.95,
            s0: 10.0,
            max_backtracks: 100,
            mu: MuSchedule::Fixed(1e-3),
            mu_coarse: None,
            coarse_tol: 1e-3,
            coarse_max_iters: 100,
            levels: None,
            backtracking: None,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
    }
}

fn open_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must lie in (0, 1), got {v}")))
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        positive("eps", self.eps)?;
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::invalid("kappa", format!("must lie in (0, 1], got {}", self.kappa)));
        }
        positive("theta", self.theta)?;
        if self.kd == 0 {
            return Err(Error::invalid("Kd", "must be a positive integer"));
        }
        open_unit("c", self.armijo_c)?;
        open_unit("tau", self.tau)?;
        positive("s0", self.s0)?;
        match self.mu {
            MuSchedule::Fixed(mu) => positive("mu", mu)?,
            MuSchedule::Theoretical { zeta } => positive("zeta", zeta)?,
        }
        if let Some(mu_h) = self.mu_coarse {
            positive("mu_H", mu_h)?;
        }
        positive("coarse_tol", self.coarse_tol)?;
        if self.levels == Some(0) {
            return Err(Error::invalid("levels", "must be at least 1"));
        }
        if let Some(bt) = self.backtracking {
            positive("L0", bt.l0)?;
            if !(bt.growth > 1.0 && bt.growth.is_finite()) {
                return Err(Error::invalid("growth", format!("must exceed 1, got {}", bt.growth)));
            }
        }
        Ok(())
    }

    /// Chain depth for a dictionary with `atoms` columns.
    pub fn resolved_levels(&self, atoms: usize) -> usize {
        match self.levels {
            Some(l) => l,
            None => max_depth(atoms).saturating_sub(1).max(1),
        }
    }

    /// `μ_k` for iteration `k` given the step sizes after that iteration.
    pub(crate) fn mu_at(&self, l_f: f64, eta: f64, alpha: f64, beta: f64) -> f64 {
        match self.mu {
            MuSchedule::Fixed(mu) => mu,
            MuSchedule::Theoretical { zeta } => {
                let denom = (l_f + eta) * alpha * alpha * beta * self.max_iters as f64;
                if denom > 0.0 && denom.is_finite() {
                    zeta / denom
                } else {
                    zeta
                }
            }
        }
    }
}
