//! Threshold sparsification of the normal matrix and the backend-switching
//! normal-equations solver.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{weighted_laplacian, EdgeWeights, Graph};
use crate::linalg::{
    analyze_order_with_stats, cholesky_with_symbolic, default_max_iterations,
    incomplete_cholesky_scaled, incomplete_cholesky_with_retry, pcg, power_iteration,
    symbolic_cholesky, CholeskyFactor, Permutation, SparseSymmetric, SymbolicCholesky,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Complete Cholesky of the unsparsified matrix.
    FullCholesky,
    /// Complete Cholesky of the sparsified matrix.
    SparsifiedCholesky,
    /// Conjugate gradients on the sparsified matrix, incomplete Cholesky
    /// preconditioner.
    SparsifiedPcg,
}

impl Backend {
    pub const ALL: [Backend; 3] = [
        Backend::FullCholesky,
        Backend::SparsifiedCholesky,
        Backend::SparsifiedPcg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::FullCholesky => "full-cholesky",
            Backend::SparsifiedCholesky => "sparsified-cholesky",
            Backend::SparsifiedPcg => "sparsified-pcg",
        }
    }

    pub fn is_sparsified(self) -> bool {
        self != Backend::FullCholesky
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full-cholesky" | "full" => Ok(Backend::FullCholesky),
            "sparsified-cholesky" | "sparse-direct" => Ok(Backend::SparsifiedCholesky),
            "sparsified-pcg" | "pcg" => Ok(Backend::SparsifiedPcg),
            other => Err(Error::Param(format!("unknown backend '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendChoice {
    /// Sparsified PCG for large edge counts or when the direct factor would
    /// fill in heavily, sparsified Cholesky otherwise.
    Auto,
    Fixed(Backend),
}

impl FromStr for BackendChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            Ok(BackendChoice::Auto)
        } else {
            s.parse().map(BackendChoice::Fixed)
        }
    }
}

impl fmt::Display for BackendChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendChoice::Auto => f.write_str("auto"),
            BackendChoice::Fixed(b) => b.fmt(f),
        }
    }
}

/// Edge count above which the automatic choice always uses PCG.
pub const AUTO_PCG_EDGES: usize = 200_000;
/// Automatic choice also switches to PCG when the estimated factor has more
/// than this many nonzeros per nonzero of the matrix (and is not tiny).
pub const AUTO_FILL_RATIO: f64 = 12.0;
const AUTO_FILL_FLOOR: f64 = 50_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsifyParams {
    pub c_t: f64,
    pub enabled: bool,
}

impl Default for SparsifyParams {
    fn default() -> Self {
        SparsifyParams {
            c_t: 0.4,
            enabled: true,
        }
    }
}

impl SparsifyParams {
    pub fn new(c_t: f64, enabled: bool) -> Result<Self> {
        if !(c_t > 0.0) || !c_t.is_finite() {
            return Err(Error::Param(format!(
                "sparsification constant must be positive, got {c_t}"
            )));
        }
        Ok(SparsifyParams { c_t, enabled })
    }
}

/// Weights below `c_t mu / (1 + rho mu)` are dropped.
pub fn sparsify_threshold(mu: f64, rho: f64, c_t: f64) -> f64 {
    c_t * mu / (1.0 + rho * mu)
}

pub fn sparsify_weights(
    weights: &EdgeWeights,
    mu: f64,
    rho: f64,
    params: SparsifyParams,
) -> EdgeWeights {
    if !params.enabled {
        return weights.clone();
    }
    let t = sparsify_threshold(mu, rho, params.c_t);
    EdgeWeights::from_vec_unchecked(
        weights
            .as_slice()
            .iter()
            .map(|&w| if w >= t { w } else { 0.0 })
            .collect(),
    )
}

pub fn build_sparsified_normal(
    g: &Graph,
    sparse_weights: &EdgeWeights,
    delta: f64,
) -> Result<SparseSymmetric> {
    weighted_laplacian(g, sparse_weights, delta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEstimate {
    /// Power-iteration estimate of `||S_full - S_sparse||_2`.
    pub gap: f64,
    /// `threshold * 2 * max_degree`.
    pub bound: f64,
}

/// Estimates the spectral norm of the dropped part `A E A^T` with
/// `E = diag(full - sparse)`, applied matrix-free so that no cancellation
/// between the two assembled matrices enters the estimate.
pub fn sparsification_gap(
    g: &Graph,
    full: &EdgeWeights,
    sparse: &EdgeWeights,
    mu: f64,
    rho: f64,
    c_t: f64,
) -> GapEstimate {
    let bound = sparsify_threshold(mu, rho, c_t) * 2.0 * g.max_degree() as f64;
    let dropped: Vec<f64> = full
        .as_slice()
        .iter()
        .zip(sparse.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    if dropped.iter().all(|&d| d == 0.0) {
        return GapEstimate { gap: 0.0, bound };
    }
    let e = EdgeWeights::from_vec_unchecked(dropped);
    let gap = power_iteration(
        |x, y| g.laplacian_apply(&e, 0.0, x, y),
        g.node_count(),
        500,
        1e-9,
        0x5eed,
    );
    GapEstimate { gap, bound }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalSolverOptions {
    pub backend: BackendChoice,
    pub sparsify: SparsifyParams,
    /// Drop tolerance of the incomplete Cholesky preconditioner.
    pub ichol_drop_tol: f64,
    /// Factor `D S D` with `D = diag(S)^{-1/2}` and undo the scaling
    /// afterwards, so the drop rule sees a unit diagonal.
    pub ichol_scaled: bool,
    /// PCG relative tolerance is this factor times `mu`.
    pub pcg_tol_factor: f64,
    pub pcg_max_iterations: Option<usize>,
}

impl Default for NormalSolverOptions {
    fn default() -> Self {
        NormalSolverOptions {
            backend: BackendChoice::Auto,
            sparsify: SparsifyParams::default(),
            ichol_drop_tol: 1e-3,
            ichol_scaled: true,
            pcg_tol_factor: 0.1,
            pcg_max_iterations: None,
        }
    }
}

/// Result of one normal-equations solve.
#[derive(Debug, Clone)]
pub struct NormalSolve {
    pub dy: Vec<f64>,
    /// `||S_full dy - rhs||`, always against the unsparsified matrix.
    pub zeta: f64,
    pub pcg_iterations: usize,
    /// Backend that produced `dy` (after any escalation).
    pub backend: Backend,
    pub escalations: usize,
}

struct OrderCache {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    perm: Permutation,
    factor_nnz: f64,
    symbolic: Option<SymbolicCholesky>,
}

impl OrderCache {
    fn matches(&self, s: &SparseSymmetric) -> bool {
        self.col_ptr == s.col_ptr() && self.row_idx == s.row_idx()
    }
}

struct Preconditioner {
    factor: CholeskyFactor,
    kept: Vec<bool>,
}

struct Prepared {
    full: EdgeWeights,
    used: EdgeWeights,
    matrix: SparseSymmetric,
    backend: Backend,
    mu: f64,
    kept: usize,
    direct: Option<CholeskyFactor>,
}

/// Normal-equations solver for one inner solve. Call [`NormalSolver::prepare`]
/// once per interior point iteration, then [`NormalSolver::solve`] for each
/// right-hand side.
pub struct NormalSolver {
    opts: NormalSolverOptions,
    delta: f64,
    orders: [Option<OrderCache>; 2],
    precond: Option<Preconditioner>,
    pcg_history: Vec<usize>,
    force_rebuild: bool,
    prepared: Option<Prepared>,
    preconditioner_builds: usize,
    precond_reused: bool,
}

const MAX_REFINEMENT_STEPS: usize = 3;
const MIN_REUSE_ITERATIONS: usize = 20;

/// Direct solve followed by iterative refinement against `s`.
fn refined_solve(s: &SparseSymmetric, f: &CholeskyFactor, rhs: &[f64]) -> Vec<f64> {
    let mut dy = f.solve(rhs);
    let mut r = vec![0.0; rhs.len()];
    for _ in 0..MAX_REFINEMENT_STEPS {
        s.matvec_into(&dy, &mut r);
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri = bi - *ri;
        }
        let corr = f.solve(&r);
        for (d, c) in dy.iter_mut().zip(&corr) {
            *d += c;
        }
    }
    dy
}

impl NormalSolver {
    pub fn new(opts: NormalSolverOptions, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Param(format!("delta must be positive, got {delta}")));
        }
        if !(opts.ichol_drop_tol >= 0.0) || !(opts.pcg_tol_factor > 0.0) {
            return Err(Error::Param(
                "drop tolerance must be >= 0 and PCG factor > 0".into(),
            ));
        }
        Ok(NormalSolver {
            opts,
            delta,
            orders: [None, None],
            precond: None,
            pcg_history: Vec::new(),
            force_rebuild: false,
            prepared: None,
            preconditioner_builds: 0,
            precond_reused: false,
        })
    }

    pub fn options(&self) -> &NormalSolverOptions {
        &self.opts
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Full weights of the prepared iteration.
    pub fn full_weights(&self) -> Option<&EdgeWeights> {
        self.prepared.as_ref().map(|p| &p.full)
    }

    /// Weights actually assembled into the solver's matrix.
    pub fn used_weights(&self) -> Option<&EdgeWeights> {
        self.prepared.as_ref().map(|p| &p.used)
    }

    /// Matrix handed to the backend (sparsified unless the backend is full).
    pub fn matrix(&self) -> Option<&SparseSymmetric> {
        self.prepared.as_ref().map(|p| &p.matrix)
    }

    pub fn backend(&self) -> Option<Backend> {
        self.prepared.as_ref().map(|p| p.backend)
    }

    pub fn kept_edges(&self) -> usize {
        self.prepared.as_ref().map_or(0, |p| p.kept)
    }

    pub fn preconditioner_builds(&self) -> usize {
        self.preconditioner_builds
    }

    fn order_for(&mut self, slot: usize, s: &SparseSymmetric) -> &mut OrderCache {
        let stale = !matches!(&self.orders[slot], Some(c) if c.matches(s));
        if stale {
            let (perm, stats) = analyze_order_with_stats(s);
            self.orders[slot] = Some(OrderCache {
                col_ptr: s.col_ptr().to_vec(),
                row_idx: s.row_idx().to_vec(),
                perm,
                factor_nnz: stats.factor_nnz,
                symbolic: None,
            });
        }
        self.orders[slot].as_mut().unwrap()
    }

    fn direct_factor(&mut self, slot: usize, s: &SparseSymmetric) -> Result<CholeskyFactor> {
        let cache = self.order_for(slot, s);
        if cache.symbolic.is_none() {
            cache.symbolic = Some(symbolic_cholesky(s, &cache.perm));
        }
        cholesky_with_symbolic(s, cache.symbolic.as_ref().unwrap())
    }

    /// Builds the weights, matrix, and factor or preconditioner for the
    /// current iterate. `full` holds `x_i / (s_i + rho x_i)`.
    pub fn prepare(&mut self, g: &Graph, full: EdgeWeights, mu: f64, rho: f64) -> Result<()> {
        let requested = match self.opts.backend {
            BackendChoice::Fixed(b) => b,
            BackendChoice::Auto if g.edge_count() > AUTO_PCG_EDGES => Backend::SparsifiedPcg,
            BackendChoice::Auto => Backend::SparsifiedCholesky,
        };
        let used = if requested.is_sparsified() {
            sparsify_weights(&full, mu, rho, self.opts.sparsify)
        } else {
            full.clone()
        };
        let kept = used.kept();
        let matrix = weighted_laplacian(g, &used, self.delta)?;
        let slot = usize::from(requested.is_sparsified());
        let mut backend = requested;
        if self.opts.backend == BackendChoice::Auto && backend == Backend::SparsifiedCholesky {
            let cache = self.order_for(slot, &matrix);
            let limit = (AUTO_FILL_RATIO * matrix.nnz_lower() as f64).max(AUTO_FILL_FLOOR);
            if cache.factor_nnz > limit {
                backend = Backend::SparsifiedPcg;
            }
        }
        let direct = match backend {
            Backend::SparsifiedPcg => {
                self.refresh_preconditioner(&matrix, &used)?;
                None
            }
            _ => Some(self.direct_factor(slot, &matrix)?),
        };
        self.prepared = Some(Prepared {
            full,
            used,
            matrix,
            backend,
            mu,
            kept,
            direct,
        });
        Ok(())
    }

    fn refresh_preconditioner(
        &mut self,
        matrix: &SparseSymmetric,
        used: &EdgeWeights,
    ) -> Result<()> {
        let mask: Vec<bool> = used.as_slice().iter().map(|&w| w > 0.0).collect();
        let rebuild = match &self.precond {
            None => true,
            Some(p) => {
                let changed = p.kept.iter().zip(&mask).filter(|(a, b)| a != b).count();
                let base = p.kept.iter().filter(|&&k| k).count().max(1);
                self.force_rebuild || changed as f64 > 0.05 * base as f64
            }
        };
        if rebuild {
            self.build_preconditioner(matrix, mask)?;
        } else {
            self.precond_reused = true;
        }
        Ok(())
    }

    fn build_preconditioner(&mut self, matrix: &SparseSymmetric, mask: Vec<bool>) -> Result<()> {
        let drop_tol = self.opts.ichol_drop_tol;
        let perm = self.order_for(1, matrix).perm.clone();
        let factor = if self.opts.ichol_scaled {
            incomplete_cholesky_scaled(matrix, &perm, drop_tol)?
        } else {
            incomplete_cholesky_with_retry(matrix, &perm, drop_tol)?
        };
        self.precond = Some(Preconditioner { factor, kept: mask });
        self.force_rebuild = false;
        self.precond_reused = false;
        self.preconditioner_builds += 1;
        Ok(())
    }

    fn running_median(&self) -> Option<usize> {
        if self.pcg_history.is_empty() {
            return None;
        }
        let mut v = self.pcg_history.clone();
        v.sort_unstable();
        Some(v[v.len() / 2])
    }

    /// `||S_full dy - rhs||` for the prepared weights.
    pub fn full_residual(&self, g: &Graph, dy: &[f64], rhs: &[f64]) -> f64 {
        let p = self.prepared.as_ref().unwrap();
        let mut r = vec![0.0; dy.len()];
        g.laplacian_apply(&p.full, self.delta, dy, &mut r);
        r.iter()
            .zip(rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn run_pcg(
        &mut self,
        rhs: &[f64],
        tol: f64,
        cap: Option<usize>,
    ) -> Result<(Vec<f64>, usize, bool)> {
        let p = self.prepared.as_ref().unwrap();
        let mut maxit = self
            .opts
            .pcg_max_iterations
            .unwrap_or_else(|| default_max_iterations(rhs.len()));
        if let Some(cap) = cap {
            maxit = maxit.min(cap);
        }
        let m = &p.matrix;
        let pre = self.precond.as_ref().map(|p| &p.factor);
        let out = pcg(|x, y| m.matvec_into(x, y), rhs, pre, tol, maxit)?;
        Ok((out.solution, out.iterations, out.converged))
    }

    /// Full-matrix direct solve with a few steps of iterative refinement.
    fn full_direct(&mut self, g: &Graph, rhs: &[f64]) -> Result<Vec<f64>> {
        let full = self.prepared.as_ref().unwrap().full.clone();
        let s = weighted_laplacian(g, &full, self.delta)?;
        let f = self.direct_factor(0, &s)?;
        Ok(refined_solve(&s, &f, rhs))
    }

    fn sparse_direct(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        let p = self.prepared.as_ref().unwrap();
        if let Some(f) = &p.direct {
            return Ok(refined_solve(&p.matrix, f, rhs));
        }
        let m = p.matrix.clone();
        let f = self.direct_factor(1, &m)?;
        Ok(refined_solve(&m, &f, rhs))
    }

    /// Solves the normal equations for `rhs`. With a budget, escalates
    /// (tighter PCG, sparsified direct, full direct with refinement) until
    /// the full-matrix residual is within it.
    pub fn solve(
        &mut self,
        g: &Graph,
        rhs: &[f64],
        zeta_budget: Option<f64>,
    ) -> Result<NormalSolve> {
        let (backend, mu) = match &self.prepared {
            Some(p) => (p.backend, p.mu),
            None => return Err(Error::Param("normal solver used before prepare".into())),
        };
        let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rhs_norm == 0.0 {
            return Ok(NormalSolve {
                dy: vec![0.0; rhs.len()],
                zeta: 0.0,
                pcg_iterations: 0,
                backend,
                escalations: 0,
            });
        }
        let within = |zeta: f64| zeta_budget.map_or(true, |b| zeta <= b);
        let mut pcg_iterations = 0;
        let mut escalations = 0;

        if backend == Backend::SparsifiedPcg {
            let mut tol = self.opts.pcg_tol_factor * mu;
            if let Some(b) = zeta_budget {
                tol = tol.min(0.5 * b / rhs_norm);
            }
            tol = tol.max(f64::EPSILON);
            let mut converged_once = false;
            for attempt in 0..2 {
                // A reused preconditioner gets twice the running median; past
                // that it is rebuilt for the current matrix.
                let cap = match (attempt, self.precond_reused, self.running_median()) {
                    (0, true, Some(median)) => Some((2 * median).max(MIN_REUSE_ITERATIONS)),
                    _ => None,
                };
                let (dy, its, converged) = self.run_pcg(rhs, tol, cap)?;
                pcg_iterations += its;
                self.note_pcg(its, converged);
                if !converged && attempt == 0 {
                    // Stale or weak preconditioner: rebuild before retrying.
                    let p = self.prepared.as_ref().unwrap();
                    let (m, mask) = (
                        p.matrix.clone(),
                        p.used.as_slice().iter().map(|&w| w > 0.0).collect(),
                    );
                    self.build_preconditioner(&m, mask)?;
                    escalations += 1;
                    continue;
                }
                let zeta = self.full_residual(g, &dy, rhs);
                if converged && within(zeta) {
                    return Ok(NormalSolve {
                        dy,
                        zeta,
                        pcg_iterations,
                        backend,
                        escalations,
                    });
                }
                converged_once |= converged;
                if converged && attempt == 0 {
                    tol = (tol / 10.0).max(f64::EPSILON);
                    escalations += 1;
                    continue;
                }
                break;
            }
            log::debug!("PCG escalation (converged: {converged_once}); falling back to direct");
            escalations += 1;
            let dy = self.sparse_direct(rhs)?;
            let zeta = self.full_residual(g, &dy, rhs);
            if within(zeta) {
                return Ok(NormalSolve {
                    dy,
                    zeta,
                    pcg_iterations,
                    backend: Backend::SparsifiedCholesky,
                    escalations,
                });
            }
        } else if backend == Backend::SparsifiedCholesky {
            let dy = self.sparse_direct(rhs)?;
            let zeta = self.full_residual(g, &dy, rhs);
            if within(zeta) {
                return Ok(NormalSolve {
                    dy,
                    zeta,
                    pcg_iterations,
                    backend,
                    escalations,
                });
            }
        } else {
            let p = self.prepared.as_ref().unwrap();
            let dy = refined_solve(&p.matrix, p.direct.as_ref().unwrap(), rhs);
            let zeta = self.full_residual(g, &dy, rhs);
            if within(zeta) {
                return Ok(NormalSolve {
                    dy,
                    zeta,
                    pcg_iterations,
                    backend,
                    escalations,
                });
            }
        }
        escalations += 1;
        let dy = self.full_direct(g, rhs)?;
        let zeta = self.full_residual(g, &dy, rhs);
        if !within(zeta) {
            return Err(Error::Numerical(format!(
                "full direct solve residual {zeta:e} exceeds budget {:e}",
                zeta_budget.unwrap_or(f64::INFINITY)
            )));
        }
        Ok(NormalSolve {
            dy,
            zeta,
            pcg_iterations,
            backend: Backend::FullCholesky,
            escalations,
        })
    }

    fn note_pcg(&mut self, iterations: usize, converged: bool) {
        let grew = self
            .running_median()
            .is_some_and(|median| iterations > 2 * median.max(1));
        if grew || !converged {
            self.force_rebuild = true;
        }
        self.pcg_history.push(iterations);
    }
}
