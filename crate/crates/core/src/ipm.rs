//! Inexact infeasible primal-dual interior point method for the proximal
//! subproblem.

use crate::error::{Error, Result};
use crate::graph::{EdgeWeights, Graph};
use crate::ppm::{natural_residual, Anchor};
use crate::problem::Problem;
use crate::report::{IterationRecord, OuterExit, SolveReport};
use crate::sparsify::{Backend, NormalSolver};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegParams {
    pub rho: f64,
    pub delta: f64,
}

impl Default for RegParams {
    fn default() -> Self {
        RegParams {
            rho: 1e-4,
            delta: 1e-6,
        }
    }
}

impl RegParams {
    pub fn new(rho: f64, delta: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite() && delta > 0.0 && delta.is_finite()) {
            return Err(Error::Param(format!(
                "rho and delta must be positive, got {rho}, {delta}"
            )));
        }
        Ok(RegParams { rho, delta })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpmIterate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
}

impl IpmIterate {
    /// Requires `x, s > 0` componentwise and finite `y`.
    pub fn new(x: Vec<f64>, y: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if x.len() != s.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: s.len(),
            });
        }
        if x.iter().chain(&s).any(|v| !(*v > 0.0) || !v.is_finite())
            || y.iter().any(|v| !v.is_finite())
        {
            return Err(Error::Validation(
                "iterate must have finite y and strictly positive x, s".into(),
            ));
        }
        Ok(IpmIterate { x, y, s })
    }

    pub fn complementarity(&self) -> f64 {
        self.x.iter().zip(&self.s).map(|(a, b)| a * b).sum()
    }

    /// `x^T s / n`.
    pub fn mu(&self) -> f64 {
        self.complementarity() / self.x.len().max(1) as f64
    }

    pub fn is_interior(&self) -> bool {
        self.x
            .iter()
            .chain(&self.s)
            .all(|v| *v > 0.0 && v.is_finite())
    }

    fn stepped(&self, dir: &Direction, alpha: f64) -> IpmIterate {
        let add = |a: &[f64], d: &[f64]| a.iter().zip(d).map(|(u, v)| u + alpha * v).collect();
        IpmIterate {
            x: add(&self.x, &dir.dx),
            y: add(&self.y, &dir.dy),
            s: add(&self.s, &dir.ds),
        }
    }
}

/// Centrality and step-decrease constants independent of the instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenteringParams {
    pub gamma_hi: f64,
    pub gamma_lo: f64,
    pub sigma: f64,
    pub sigma_bar: f64,
}

impl Default for CenteringParams {
    fn default() -> Self {
        CenteringParams {
            gamma_hi: 1e4,
            gamma_lo: 1e-4,
            sigma: 0.1,
            sigma_bar: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodParams {
    pub gamma_hi: f64,
    pub gamma_lo: f64,
    pub gamma_p: f64,
    pub gamma_d: f64,
    pub sigma: f64,
    pub sigma_bar: f64,
    pub c_inexact: f64,
}

impl NeighborhoodParams {
    pub fn new(
        gamma_hi: f64,
        gamma_lo: f64,
        gamma_p: f64,
        gamma_d: f64,
        sigma: f64,
        sigma_bar: f64,
        c_inexact: f64,
    ) -> Result<Self> {
        let ok = gamma_hi > 1.0
            && gamma_lo > 0.0
            && gamma_lo < 1.0
            && gamma_p > 0.0
            && gamma_d > 0.0
            && sigma > 0.0
            && sigma < sigma_bar
            && sigma_bar < 1.0
            && c_inexact > 0.0
            && c_inexact < 1.0
            && gamma_p * c_inexact < sigma;
        if !ok {
            return Err(Error::Param(
                "neighbourhood parameters violate their required orderings".into(),
            ));
        }
        Ok(NeighborhoodParams {
            gamma_hi,
            gamma_lo,
            gamma_p,
            gamma_d,
            sigma,
            sigma_bar,
            c_inexact,
        })
    }

    /// Chooses `gamma_p = gamma_d` so that `start` meets both feasibility
    /// conditions with a factor-2 slack (capped at 1), and
    /// `c_inexact = min(0.5, sigma / (2 gamma_p))`.
    pub fn calibrated(
        start: &IpmIterate,
        anchor: &Anchor,
        prob: &Problem,
        reg: &RegParams,
        base: CenteringParams,
    ) -> Result<Self> {
        let xs = start.complementarity();
        let rp = norm2(&primal_infeasibility(start, anchor, prob, reg));
        let rd = norm2(&dual_infeasibility(start, anchor, prob, reg));
        let mut gamma = 1.0f64;
        if rp > 0.0 {
            gamma = gamma.min(xs / (2.0 * rp));
        }
        if rd > 0.0 {
            gamma = gamma.min(xs / (2.0 * rd));
        }
        gamma = gamma.max(f64::MIN_POSITIVE);
        let c_inexact = (0.5 * base.sigma / gamma).min(0.5);
        Self::new(
            base.gamma_hi,
            base.gamma_lo,
            gamma,
            gamma,
            base.sigma,
            base.sigma_bar,
            c_inexact,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub xi_d: Vec<f64>,
    pub xi_p: Vec<f64>,
    pub xi_mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub ds: Vec<f64>,
}

impl Direction {
    fn add_assign(&mut self, other: &Direction) {
        for (a, b) in [
            (&mut self.dx, &other.dx),
            (&mut self.dy, &other.dy),
            (&mut self.ds, &other.ds),
        ] {
            a.iter_mut().zip(b).for_each(|(u, v)| *u += v);
        }
    }
}

/// Diagnostics of one normal-equations based Newton solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonInfo {
    /// `||S dy - rhs||` against the full normal matrix.
    pub zeta: f64,
    pub zeta_budget: f64,
    pub zeta_ok: bool,
    pub pcg_iterations: usize,
    pub backend: Backend,
    pub kept_edges: usize,
    pub row1_error: f64,
    pub row3_error: f64,
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `A x + delta (y - y_k) - b`.
pub fn primal_infeasibility(
    it: &IpmIterate,
    anchor: &Anchor,
    prob: &Problem,
    reg: &RegParams,
) -> Vec<f64> {
    let g = prob.graph();
    let mut r = vec![0.0; g.node_count()];
    g.incidence_matvec_into(&it.x, &mut r);
    for i in 0..r.len() {
        r[i] += reg.delta * (it.y[i] - anchor.y[i]) - prob.load()[i];
    }
    r
}

/// `rho (x - x_k) - A^T y - s + c`.
pub fn dual_infeasibility(
    it: &IpmIterate,
    anchor: &Anchor,
    prob: &Problem,
    reg: &RegParams,
) -> Vec<f64> {
    let g = prob.graph();
    let mut r = vec![0.0; g.edge_count()];
    g.incidence_rmatvec_into(&it.y, &mut r);
    let c = prob.costs();
    for e in 0..r.len() {
        r[e] = reg.rho * (it.x[e] - anchor.x[e]) - r[e] - it.s[e] + c[e];
    }
    r
}

/// Newton right-hand side blocks for centering parameter `sigma`.
pub fn residuals(
    it: &IpmIterate,
    anchor: &Anchor,
    prob: &Problem,
    reg: &RegParams,
    sigma: f64,
) -> Residuals {
    let mut xi_d = dual_infeasibility(it, anchor, prob, reg);
    xi_d.iter_mut().for_each(|v| *v = -*v);
    let mut xi_p = primal_infeasibility(it, anchor, prob, reg);
    xi_p.iter_mut().for_each(|v| *v = -*v);
    let target = sigma * it.mu();
    let xi_mu =
        it.x.iter()
            .zip(&it.s)
            .map(|(x, s)| target - x * s)
            .collect();
    Residuals { xi_d, xi_p, xi_mu }
}

/// Diagonal of `(Theta^{-1} + rho I)^{-1}`, i.e. `x_i / (s_i + rho x_i)`.
pub fn scaled_weights(it: &IpmIterate, reg: &RegParams) -> EdgeWeights {
    EdgeWeights::from_vec_unchecked(
        it.x.iter()
            .zip(&it.s)
            .map(|(x, s)| x / (s + reg.rho * x))
            .collect(),
    )
}

/// `xi_p - A W (X^{-1} xi_mu + xi_d)`.
pub fn assemble_normal_rhs(
    g: &Graph,
    res: &Residuals,
    it: &IpmIterate,
    reg: &RegParams,
) -> Vec<f64> {
    let w = scaled_weights(it, reg);
    normal_rhs_with(g, res, it, &w)
}

fn normal_rhs_with(g: &Graph, res: &Residuals, it: &IpmIterate, w: &EdgeWeights) -> Vec<f64> {
    let t: Vec<f64> = (0..it.x.len())
        .map(|e| w.as_slice()[e] * (res.xi_mu[e] / it.x[e] + res.xi_d[e]))
        .collect();
    let mut at = vec![0.0; g.node_count()];
    g.incidence_matvec_into(&t, &mut at);
    res.xi_p.iter().zip(&at).map(|(p, a)| p - a).collect()
}

/// Recovers `dx` and `ds` from `dy` through the two exact block rows.
fn complete_direction(
    g: &Graph,
    dy: Vec<f64>,
    res: &Residuals,
    it: &IpmIterate,
    w: &EdgeWeights,
) -> Direction {
    let mut atdy = vec![0.0; it.x.len()];
    g.incidence_rmatvec_into(&dy, &mut atdy);
    let w = w.as_slice();
    let dx: Vec<f64> = (0..it.x.len())
        .map(|e| w[e] * (atdy[e] + res.xi_d[e] + res.xi_mu[e] / it.x[e]))
        .collect();
    let ds = (0..it.x.len())
        .map(|e| (res.xi_mu[e] - it.s[e] * dx[e]) / it.x[e])
        .collect();
    Direction { dx, dy, ds }
}

const KKT_REFINEMENT_STEPS: usize = 2;

/// Residual of the full Newton system at `dir`, in the layout of `res`.
fn kkt_residual(
    g: &Graph,
    dir: &Direction,
    res: &Residuals,
    it: &IpmIterate,
    reg: &RegParams,
) -> Residuals {
    let n = it.x.len();
    let mut atdy = vec![0.0; n];
    g.incidence_rmatvec_into(&dir.dy, &mut atdy);
    let mut adx = vec![0.0; g.node_count()];
    g.incidence_matvec_into(&dir.dx, &mut adx);
    Residuals {
        xi_d: (0..n)
            .map(|e| res.xi_d[e] - (reg.rho * dir.dx[e] - atdy[e] - dir.ds[e]))
            .collect(),
        xi_p: (0..adx.len())
            .map(|i| res.xi_p[i] - (adx[i] + reg.delta * dir.dy[i]))
            .collect(),
        xi_mu: (0..n)
            .map(|e| res.xi_mu[e] - (it.s[e] * dir.dx[e] + it.x[e] * dir.ds[e]))
            .collect(),
    }
}

/// Relative errors of block rows 1 and 3 of the Newton system: per
/// coordinate `|residual| / (1 + sum of |terms|)`, maximised.
fn row_errors(
    g: &Graph,
    dir: &Direction,
    res: &Residuals,
    it: &IpmIterate,
    reg: &RegParams,
) -> (f64, f64) {
    let n = it.x.len();
    let mut atdy = vec![0.0; n];
    g.incidence_rmatvec_into(&dir.dy, &mut atdy);
    let (mut r1, mut r3) = (0.0f64, 0.0f64);
    for e in 0..n {
        let a = reg.rho * dir.dx[e];
        let v = a - atdy[e] - dir.ds[e] - res.xi_d[e];
        let m = a.abs() + atdy[e].abs() + dir.ds[e].abs() + res.xi_d[e].abs();
        r1 = r1.max(v.abs() / (1.0 + m));
        let p = it.s[e] * dir.dx[e];
        let q = it.x[e] * dir.ds[e];
        let u = p + q - res.xi_mu[e];
        r3 = r3.max(u.abs() / (1.0 + p.abs() + q.abs() + res.xi_mu[e].abs()));
    }
    (r1, r3)
}

fn solve_prepared(
    g: &Graph,
    it: &IpmIterate,
    res: &Residuals,
    reg: &RegParams,
    solver: &mut NormalSolver,
    zeta_budget: Option<f64>,
) -> Result<(Direction, NewtonInfo)> {
    let w = solver.full_weights().expect("prepared").clone();
    let rhs = normal_rhs_with(g, res, it, &w);
    let mut out = solver.solve(g, &rhs, zeta_budget)?;
    let mut dir = complete_direction(g, out.dy.clone(), res, it, &w);
    if out.backend == Backend::FullCholesky {
        for _ in 0..KKT_REFINEMENT_STEPS {
            let r = kkt_residual(g, &dir, res, it, reg);
            let corr_rhs = normal_rhs_with(g, &r, it, &w);
            let corr = solver.solve(g, &corr_rhs, None)?;
            let step = complete_direction(g, corr.dy, &r, it, &w);
            dir.add_assign(&step);
        }
        out.zeta = solver.full_residual(g, &dir.dy, &rhs);
    }
    let (row1_error, row3_error) = row_errors(g, &dir, res, it, reg);
    let budget = zeta_budget.unwrap_or(f64::INFINITY);
    Ok((
        dir,
        NewtonInfo {
            zeta: out.zeta,
            zeta_budget: budget,
            zeta_ok: out.zeta <= budget,
            pcg_iterations: out.pcg_iterations,
            backend: out.backend,
            kept_edges: solver.kept_edges(),
            row1_error,
            row3_error,
        },
    ))
}

/// Inexact Newton direction. With a budget the normal-equations residual
/// is kept within it (escalating the linear solver as needed).
pub fn newton_step(
    it: &IpmIterate,
    res: &Residuals,
    prob: &Problem,
    reg: &RegParams,
    solver: &mut NormalSolver,
    zeta_budget: Option<f64>,
) -> Result<(Direction, NewtonInfo)> {
    let g = prob.graph();
    solver.prepare(g, scaled_weights(it, reg), it.mu(), reg.rho)?;
    solve_prepared(g, it, res, reg, solver, zeta_budget)
}

/// Mehrotra predictor-corrector direction; both solves share one
/// factorization or preconditioner. Returns the centering parameter used.
pub fn predictor_corrector_step(
    it: &IpmIterate,
    anchor: &Anchor,
    prob: &Problem,
    reg: &RegParams,
    solver: &mut NormalSolver,
    zeta_budget: Option<f64>,
) -> Result<(Direction, f64, Residuals, NewtonInfo)> {
    let g = prob.graph();
    let mu = it.mu();
    solver.prepare(g, scaled_weights(it, reg), mu, reg.rho)?;
    let affine_res = residuals(it, anchor, prob, reg, 0.0);
    let (affine, affine_info) = solve_prepared(g, it, &affine_res, reg, solver, zeta_budget)?;
    let (ap, ad) = boundary_steps(it, &affine);
    let alpha_aff = ap.min(ad).min(1.0);
    let mu_aff = (0..it.x.len())
        .map(|e| (it.x[e] + alpha_aff * affine.dx[e]) * (it.s[e] + alpha_aff * affine.ds[e]))
        .sum::<f64>()
        / it.x.len() as f64;
    let sigma = centering_from_affine(mu_aff, mu);
    let mut res = affine_res;
    for e in 0..it.x.len() {
        res.xi_mu[e] += sigma * mu - affine.dx[e] * affine.ds[e];
    }
    let (dir, mut info) = solve_prepared(g, it, &res, reg, solver, zeta_budget)?;
    info.pcg_iterations += affine_info.pcg_iterations;
    Ok((dir, sigma, res, info))
}

/// `(mu_aff / mu)^3` clamped to `[0, 1]`.
pub fn centering_from_affine(mu_aff: f64, mu: f64) -> f64 {
    if !(mu > 0.0) {
        return 0.0;
    }
    (mu_aff / mu).max(0.0).powi(3).clamp(0.0, 1.0)
}

/// Largest primal and dual steps keeping `x` and `s` non-negative
/// (infinite when a block never decreases).
pub fn boundary_steps(it: &IpmIterate, dir: &Direction) -> (f64, f64) {
    let ratio = |v: &[f64], d: &[f64]| {
        v.iter()
            .zip(d)
            .filter(|(_, d)| **d < 0.0)
            .map(|(v, d)| -v / d)
            .fold(f64::INFINITY, f64::min)
    };
    (ratio(&it.x, &dir.dx), ratio(&it.s, &dir.ds))
}

fn products_centered(it: &IpmIterate, nb: &NeighborhoodParams) -> bool {
    let mu = it.mu();
    it.x.iter()
        .zip(&it.s)
        .all(|(x, s)| x * s <= nb.gamma_hi * mu && x * s >= nb.gamma_lo * mu)
}

/// Membership in the infeasible central-path neighbourhood.
pub fn neighborhood_check(
    it: &IpmIterate,
    anchor: &Anchor,
    prob: &Problem,
    reg: &RegParams,
    nb: &NeighborhoodParams,
) -> bool {
    let xs = it.complementarity();
    products_centered(it, nb)
        && xs >= nb.gamma_p * norm2(&primal_infeasibility(it, anchor, prob, reg))
        && xs >= nb.gamma_d * norm2(&dual_infeasibility(it, anchor, prob, reg))
}

/// Backtracking search for the step length: starts at
/// `min(1, 0.995 alpha*)`, shrinks by 0.9, at most 60 trials.
pub fn step_search(
    it: &IpmIterate,
    dir: &Direction,
    anchor: &Anchor,
    prob: &Problem,
    reg: &RegParams,
    nb: &NeighborhoodParams,
) -> Result<f64> {
    let g = prob.graph();
    let n = it.x.len();
    let (ap, ad) = boundary_steps(it, dir);
    let mut alpha = (0.995 * ap.min(ad)).min(1.0);
    let rp = primal_infeasibility(it, anchor, prob, reg);
    let rd = dual_infeasibility(it, anchor, prob, reg);
    // Both infeasibilities move linearly along the direction.
    let mut drp = vec![0.0; g.node_count()];
    g.incidence_matvec_into(&dir.dx, &mut drp);
    for i in 0..drp.len() {
        drp[i] += reg.delta * dir.dy[i];
    }
    let mut drd = vec![0.0; n];
    g.incidence_rmatvec_into(&dir.dy, &mut drd);
    for e in 0..n {
        drd[e] = reg.rho * dir.dx[e] - drd[e] - dir.ds[e];
    }
    let xs = it.complementarity();
    let lin = |a: &[f64], d: &[f64], t: f64| {
        a.iter()
            .zip(d)
            .map(|(u, v)| (u + t * v).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    for _ in 0..60 {
        if alpha < 1e-10 {
            break;
        }
        let trial = it.stepped(dir, alpha);
        if trial.is_interior() {
            let xs_t = trial.complementarity();
            let decrease = xs_t <= (1.0 - (1.0 - nb.sigma_bar) * alpha) * xs;
            if decrease
                && products_centered(&trial, nb)
                && xs_t >= nb.gamma_p * lin(&rp, &drp, alpha)
                && xs_t >= nb.gamma_d * lin(&rd, &drd, alpha)
            {
                return Ok(alpha);
            }
        }
        alpha *= 0.9;
    }
    Err(Error::Stall {
        alpha,
        reason: "no step length keeps the iterate in the neighbourhood with sufficient decrease"
            .into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Mehrotra predictor-corrector, fraction-to-boundary steps.
    Practical,
    /// Fixed centering, neighbourhood-enforcing step search and enforced
    /// inexactness budget.
    Theory,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "practical" => Ok(Mode::Practical),
            "theory" => Ok(Mode::Theory),
            other => Err(Error::Param(format!("unknown mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Practical => "practical",
            Mode::Theory => "theory",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub mode: Mode,
    pub max_iterations: usize,
    pub centering: CenteringParams,
    /// A boundary point whose natural residual and complementarity are
    /// below this ends the subproblem early (theory mode).
    pub boundary_tol: f64,
}

impl InnerOptions {
    pub fn for_mode(mode: Mode) -> Self {
        InnerOptions {
            mode,
            max_iterations: match mode {
                Mode::Theory => 500,
                Mode::Practical => 200,
            },
            centering: CenteringParams::default(),
            boundary_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Subproblem,
    Global,
}

/// Everything known about one accepted step, handed to observers.
pub struct StepView<'a> {
    pub record: &'a IterationRecord,
    pub before: &'a IpmIterate,
    pub after: &'a IpmIterate,
    pub anchor: &'a Anchor,
    pub direction: &'a Direction,
    pub residuals: &'a Residuals,
    pub neighborhood: &'a NeighborhoodParams,
    pub solver: &'a NormalSolver,
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub iterate: IpmIterate,
    pub exit: OuterExit,
    pub records: Vec<IterationRecord>,
}

/// Solves the proximal subproblem anchored at `anchor` from `start` until
/// `stop` accepts an iterate.
#[allow(clippy::too_many_arguments)]
pub fn inner_solve(
    anchor: &Anchor,
    prob: &Problem,
    reg: &RegParams,
    nb: &NeighborhoodParams,
    start: IpmIterate,
    solver: &mut NormalSolver,
    opts: &InnerOptions,
    stop: &mut dyn FnMut(&IpmIterate) -> StopDecision,
    observer: &mut dyn FnMut(&StepView<'_>),
) -> Result<InnerResult> {
    let mut it = start;
    let mut records = Vec::new();
    match stop(&it) {
        StopDecision::Continue => {}
        StopDecision::Subproblem => {
            return Ok(InnerResult {
                iterate: it,
                exit: OuterExit::Subproblem,
                records,
            })
        }
        StopDecision::Global => {
            return Ok(InnerResult {
                iterate: it,
                exit: OuterExit::Global,
                records,
            })
        }
    }
    for j in 0..opts.max_iterations {
        let mu = it.mu();
        let budget = nb.c_inexact * it.complementarity();
        let rd_old = dual_infeasibility(&it, anchor, prob, reg);
        let rp_old = primal_infeasibility(&it, anchor, prob, reg);
        let (dir, sigma, res, info) = match opts.mode {
            Mode::Theory => {
                let res = residuals(&it, anchor, prob, reg, nb.sigma);
                let (dir, info) = newton_step(&it, &res, prob, reg, solver, Some(budget))?;
                (dir, nb.sigma, res, info)
            }
            Mode::Practical => {
                let (dir, sigma, res, mut info) =
                    predictor_corrector_step(&it, anchor, prob, reg, solver, None)?;
                info.zeta_budget = budget;
                info.zeta_ok = info.zeta <= budget;
                (dir, sigma, res, info)
            }
        };
        let (ap, ad) = boundary_steps(&it, &dir);
        let alpha_star = ap.min(ad);

        if opts.mode == Mode::Theory && alpha_star <= 1.0 {
            let mut edge = it.stepped(&dir, alpha_star);
            edge.x
                .iter_mut()
                .chain(edge.s.iter_mut())
                .for_each(|v| *v = v.max(0.0));
            let comp = edge
                .x
                .iter()
                .zip(&edge.s)
                .map(|(a, b)| a * b)
                .fold(0.0, f64::max);
            if comp <= opts.boundary_tol
                && natural_residual(&edge.x, &edge.y, anchor, prob, reg) <= opts.boundary_tol
            {
                return Ok(InnerResult {
                    iterate: edge,
                    exit: OuterExit::Boundary,
                    records,
                });
            }
        }

        let alpha = match opts.mode {
            Mode::Theory => step_search(&it, &dir, anchor, prob, reg, nb)?,
            Mode::Practical => {
                let a = (0.995 * alpha_star).min(1.0);
                if !(a >= 1e-10) {
                    return Err(Error::Stall {
                        alpha: a,
                        reason: "fraction-to-boundary step vanished".into(),
                    });
                }
                a
            }
        };
        let next = it.stepped(&dir, alpha);
        let rd_new = dual_infeasibility(&next, anchor, prob, reg);
        let contraction = rd_new
            .iter()
            .zip(&rd_old)
            .map(|(n, o)| (n - (1.0 - alpha) * o).powi(2))
            .sum::<f64>()
            .sqrt()
            / norm2(&rd_old).max(1.0);
        let record = IterationRecord {
            outer: anchor.k,
            inner: j,
            mu,
            primal_residual: norm2(&rp_old),
            dual_residual: norm2(&rd_old),
            alpha,
            sigma,
            pcg_iterations: info.pcg_iterations,
            kept_edges: info.kept_edges,
            backend: info.backend,
            zeta: info.zeta,
            zeta_budget: info.zeta_budget,
            zeta_ok: info.zeta_ok,
            in_neighborhood: neighborhood_check(&next, anchor, prob, reg, nb),
            mu_next: next.mu(),
            dual_contraction_error: contraction,
            row1_error: info.row1_error,
            row3_error: info.row3_error,
        };
        log::trace!(
            "k={} j={} mu={:.3e} alpha={:.3e} sigma={:.3e} pcg={} kept={}",
            anchor.k,
            j,
            mu,
            alpha,
            sigma,
            info.pcg_iterations,
            info.kept_edges
        );
        observer(&StepView {
            record: &record,
            before: &it,
            after: &next,
            anchor,
            direction: &dir,
            residuals: &res,
            neighborhood: nb,
            solver,
        });
        records.push(record);
        it = next;
        match stop(&it) {
            StopDecision::Continue => {}
            StopDecision::Subproblem => {
                return Ok(InnerResult {
                    iterate: it,
                    exit: OuterExit::Subproblem,
                    records,
                })
            }
            StopDecision::Global => {
                return Ok(InnerResult {
                    iterate: it,
                    exit: OuterExit::Global,
                    records,
                })
            }
        }
    }
    let mut report = SolveReport::new();
    report.iterations = records;
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        reason: format!("inner iteration cap reached in subproblem {}", anchor.k),
        report: Some(Box::new(report)),
    })
}
