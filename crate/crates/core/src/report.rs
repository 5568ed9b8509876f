use std::time::Duration;

use crate::sparsify::Backend;

/// One inner interior point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub outer: usize,
    pub inner: usize,
    pub mu: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub pcg_iterations: usize,
    pub kept_edges: usize,
    pub backend: Backend,
    pub zeta: f64,
    pub zeta_budget: f64,
    pub zeta_ok: bool,
    /// Neighbourhood membership of the accepted point (always evaluated).
    pub in_neighborhood: bool,
    pub mu_next: f64,
    /// `||new dual residual - (1 - alpha) old||` relative to `max(1, ||old||)`.
    pub dual_contraction_error: f64,
    pub row1_error: f64,
    pub row3_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterExit {
    /// Proximal subproblem solved to the inexactness threshold.
    Subproblem,
    /// Global stopping test met inside the inner loop.
    Global,
    /// Boundary point solved the subproblem.
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub k: usize,
    pub natural_residual: f64,
    pub step_norm: f64,
    pub threshold: f64,
    pub inner_iterations: usize,
    pub exit: OuterExit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Zero load: the zero flow is optimal without iterating.
    Trivial,
    NotConverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: Vec<IterationRecord>,
    pub outer: Vec<OuterRecord>,
    pub time: Duration,
}

impl SolveReport {
    pub(crate) fn new() -> Self {
        SolveReport {
            status: SolveStatus::NotConverged,
            iterations: Vec::new(),
            outer: Vec::new(),
            time: Duration::ZERO,
        }
    }

    pub fn outer_iterations(&self) -> usize {
        self.outer.len()
    }

    pub fn ipm_iterations(&self) -> usize {
        self.iterations.len()
    }

    pub fn pcg_iterations(&self) -> usize {
        self.iterations.iter().map(|r| r.pcg_iterations).sum()
    }

    /// Largest observed `||zeta|| / budget`.
    pub fn zeta_ratio_max(&self) -> f64 {
        self.iterations
            .iter()
            .filter(|r| r.zeta_budget > 0.0)
            .map(|r| r.zeta / r.zeta_budget)
            .fold(0.0, f64::max)
    }
}
