//! Outer proximal point loop and its stopping rules.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::ipm::{
    inner_solve, CenteringParams, InnerOptions, IpmIterate, Mode, NeighborhoodParams, RegParams,
    StepView, StopDecision,
};
use crate::problem::Problem;
use crate::report::{OuterExit, OuterRecord, SolveReport, SolveStatus};
use crate::sparsify::{NormalSolver, NormalSolverOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpmParams {
    pub sigma_r: f64,
    pub tau_1: f64,
    pub tol: f64,
    pub max_outer: usize,
}

impl Default for PpmParams {
    fn default() -> Self {
        PpmParams {
            sigma_r: 0.7,
            tau_1: 1e-4,
            tol: 1e-10,
            max_outer: 200,
        }
    }
}

impl PpmParams {
    pub fn new(sigma_r: f64, tau_1: f64, tol: f64, max_outer: usize) -> Result<Self> {
        if !(sigma_r > 0.0 && sigma_r < 1.0 && tau_1 > 0.0 && tol > 0.0 && max_outer > 0) {
            return Err(Error::Param(
                "need 0 < sigma_r < 1, tau_1 > 0, tol > 0, max_outer > 0".into(),
            ));
        }
        Ok(PpmParams {
            sigma_r,
            tau_1,
            tol,
            max_outer,
        })
    }

    /// The unrelaxed inexactness rule (`tau_1 = 1`).
    pub fn strict(self) -> Self {
        PpmParams { tau_1: 1.0, ..self }
    }

    /// `(sigma_r^k / tau_1) min(1, step_norm)`.
    pub fn threshold(&self, step_norm: f64, k: usize) -> f64 {
        self.sigma_r.powi(k as i32) / self.tau_1 * step_norm.min(1.0)
    }
}

/// Proximal centre of subproblem `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub k: usize,
}

/// Projection-based optimality measure of the proximal subproblem; zero
/// exactly at its solution.
pub fn natural_residual(
    x: &[f64],
    y: &[f64],
    anchor: &Anchor,
    prob: &Problem,
    reg: &RegParams,
) -> f64 {
    let g = prob.graph();
    let mut aty = vec![0.0; x.len()];
    g.incidence_rmatvec_into(y, &mut aty);
    let c = prob.costs();
    let mut acc = 0.0;
    for e in 0..x.len() {
        let grad = reg.rho * (x[e] - anchor.x[e]) + c[e] - aty[e];
        let v = x[e] - (x[e] - grad).max(0.0);
        acc += v * v;
    }
    let mut ax = vec![0.0; y.len()];
    g.incidence_matvec_into(x, &mut ax);
    for i in 0..y.len() {
        let v = ax[i] - prob.load()[i] + reg.delta * (y[i] - anchor.y[i]);
        acc += v * v;
    }
    acc.sqrt()
}

pub fn ppm_stop_test(natural_residual: f64, step_norm: f64, k: usize, params: &PpmParams) -> bool {
    natural_residual < params.threshold(step_norm, k)
}

/// Quantities of the global stopping test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopMeasures {
    /// `||c - A^T y - s||_inf`.
    pub dual_infeasibility: f64,
    /// `||b - A x||_1`.
    pub primal_infeasibility: f64,
    /// `max_i min(|x_i s_i|, |x_i|, |s_i|)`.
    pub complementarity: f64,
    /// `max(||A||_inf, ||b||_1, ||c||_1)`.
    pub scale: f64,
}

impl StopMeasures {
    pub fn compute(x: &[f64], y: &[f64], s: &[f64], prob: &Problem) -> Self {
        let g = prob.graph();
        let mut aty = vec![0.0; x.len()];
        g.incidence_rmatvec_into(y, &mut aty);
        let dual = (0..x.len())
            .map(|e| (prob.costs()[e] - aty[e] - s[e]).abs())
            .fold(0.0, f64::max);
        let mut ax = vec![0.0; y.len()];
        g.incidence_matvec_into(x, &mut ax);
        let primal = ax.iter().zip(prob.load()).map(|(a, b)| (b - a).abs()).sum();
        let comp = x
            .iter()
            .zip(s)
            .map(|(a, b)| (a * b).abs().min(a.abs()).min(b.abs()))
            .fold(0.0, f64::max);
        StopMeasures {
            dual_infeasibility: dual,
            primal_infeasibility: primal,
            complementarity: comp,
            scale: prob.scale(),
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.dual_infeasibility <= self.scale * tol
            && self.primal_infeasibility <= self.scale * tol
            && self.complementarity <= tol
    }
}

pub fn global_stop_test(x: &[f64], y: &[f64], s: &[f64], prob: &Problem, tol: f64) -> bool {
    StopMeasures::compute(x, y, s, prob).passes(tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub reg: RegParams,
    pub mode: Mode,
    pub normal: NormalSolverOptions,
    pub ppm: PpmParams,
    pub centering: CenteringParams,
    /// Per-subproblem cap; `None` uses the mode default.
    pub max_inner_iterations: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            reg: RegParams::default(),
            mode: Mode::Practical,
            normal: NormalSolverOptions::default(),
            ppm: PpmParams::default(),
            centering: CenteringParams::default(),
            max_inner_iterations: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub objective: f64,
    pub report: SolveReport,
}

fn cold_start(prob: &Problem, anchor: &Anchor) -> IpmIterate {
    let n = prob.edge_count();
    let level = (prob.load_l1() / n as f64).max(1.0);
    IpmIterate {
        x: vec![level; n],
        y: anchor.y.clone(),
        s: vec![1.0; n],
    }
}

fn distance(x: &[f64], y: &[f64], anchor: &Anchor) -> f64 {
    let dx: f64 = x.iter().zip(&anchor.x).map(|(a, b)| (a - b).powi(2)).sum();
    let dy: f64 = y.iter().zip(&anchor.y).map(|(a, b)| (a - b).powi(2)).sum();
    (dx + dy).sqrt()
}

/// Proximal-stabilized interior point solve of the transport problem.
pub fn ps_ipm_solve(prob: &Problem, opts: &SolverOptions) -> Result<Solution> {
    solve_impl(prob, opts, None)
}

/// As [`ps_ipm_solve`], reporting every accepted interior point step.
pub fn ps_ipm_solve_observed(
    prob: &Problem,
    opts: &SolverOptions,
    observer: &mut dyn FnMut(&StepView<'_>),
) -> Result<Solution> {
    solve_impl(prob, opts, Some(observer))
}

fn solve_impl(
    prob: &Problem,
    opts: &SolverOptions,
    observer: Option<&mut dyn FnMut(&StepView<'_>)>,
) -> Result<Solution> {
    let mut noop = |_: &StepView<'_>| {};
    let observer: &mut dyn FnMut(&StepView<'_>) = match observer {
        Some(o) => o,
        None => &mut noop,
    };
    let started = Instant::now();
    let n = prob.edge_count();
    let m = prob.node_count();
    let mut report = SolveReport::new();
    if prob.load().iter().all(|&v| v == 0.0) {
        report.status = SolveStatus::Trivial;
        report.time = started.elapsed();
        return Ok(Solution {
            x: vec![0.0; n],
            y: vec![0.0; m],
            s: prob.costs().to_vec(),
            objective: 0.0,
            report,
        });
    }
    let reg = opts.reg;
    let ppm = opts.ppm;
    let mut inner_opts = InnerOptions::for_mode(opts.mode);
    inner_opts.centering = opts.centering;
    if let Some(cap) = opts.max_inner_iterations {
        inner_opts.max_iterations = cap;
    }
    let mut solver = NormalSolver::new(opts.normal, reg.delta)?;
    let mut anchor = Anchor {
        x: vec![1.0; n],
        y: vec![0.0; m],
        k: 0,
    };
    let mut it = cold_start(prob, &anchor);

    for k in 0..ppm.max_outer {
        anchor.k = k;
        let nb = NeighborhoodParams::calibrated(&it, &anchor, prob, &reg, opts.centering)?;
        let mut last_test = (0.0, 0.0, 0.0);
        let mut stop = |cand: &IpmIterate| {
            if global_stop_test(&cand.x, &cand.y, &cand.s, prob, ppm.tol) {
                return StopDecision::Global;
            }
            let res = natural_residual(&cand.x, &cand.y, &anchor, prob, &reg);
            let step = distance(&cand.x, &cand.y, &anchor);
            last_test = (res, step, ppm.threshold(step, k));
            if ppm_stop_test(res, step, k, &ppm) {
                StopDecision::Subproblem
            } else {
                StopDecision::Continue
            }
        };
        let outcome = inner_solve(
            &anchor,
            prob,
            &reg,
            &nb,
            it,
            &mut solver,
            &inner_opts,
            &mut stop,
            &mut *observer,
        );
        let result = match outcome {
            Ok(r) => r,
            Err(Error::NonConvergence {
                iterations,
                reason,
                report: partial,
            }) => {
                if let Some(p) = partial {
                    report.iterations.extend(p.iterations);
                }
                report.time = started.elapsed();
                return Err(Error::NonConvergence {
                    iterations,
                    reason,
                    report: Some(Box::new(report)),
                });
            }
            Err(e) => return Err(e),
        };
        let (natural, step_norm, threshold) = match result.exit {
            OuterExit::Subproblem => last_test,
            _ => {
                let res =
                    natural_residual(&result.iterate.x, &result.iterate.y, &anchor, prob, &reg);
                let step = distance(&result.iterate.x, &result.iterate.y, &anchor);
                (res, step, ppm.threshold(step, k))
            }
        };
        log::debug!(
            "outer {k}: {} inner iterations, natural residual {natural:.3e} (threshold {threshold:.3e}), mu {:.3e}",
            result.records.len(),
            result.iterate.mu()
        );
        report.outer.push(OuterRecord {
            k,
            natural_residual: natural,
            step_norm,
            threshold,
            inner_iterations: result.records.len(),
            exit: result.exit,
        });
        report.iterations.extend(result.records);
        let finished = result.exit == OuterExit::Global
            || (result.exit == OuterExit::Boundary
                && global_stop_test(
                    &result.iterate.x,
                    &result.iterate.y,
                    &result.iterate.s,
                    prob,
                    ppm.tol,
                ));
        if finished {
            report.status = SolveStatus::Optimal;
            report.time = started.elapsed();
            let IpmIterate { x, y, s } = result.iterate;
            let objective = prob.objective(&x);
            return Ok(Solution {
                x,
                y,
                s,
                objective,
                report,
            });
        }
        anchor.x.clone_from(&result.iterate.x);
        anchor.y.clone_from(&result.iterate.y);
        it = if result.iterate.is_interior() {
            result.iterate
        } else {
            cold_start(prob, &anchor)
        };
    }
    report.time = started.elapsed();
    Err(Error::NonConvergence {
        iterations: ppm.max_outer,
        reason: "outer iteration cap reached".into(),
        report: Some(Box::new(report)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::io::generate_problem;
    use crate::io::GeneratorSpec;
    use crate::oracle::solve_mcf_exact;

    fn path_problem(load: Vec<f64>) -> Problem {
        let g = Graph::with_unit_costs(3, &[(0, 1), (1, 2)]).unwrap();
        Problem::new(g, load).unwrap()
    }

    #[test]
    fn thresholds() {
        let p = PpmParams::default();
        assert!((p.threshold(1.0, 0) - 1e4).abs() < 1e-9);
        assert!((p.threshold(5.0, 0) - 1e4).abs() < 1e-9);
        assert!(ppm_stop_test(9_999.0, 2.0, 0, &p));
        let t20 = p.threshold(1.0, 20);
        assert!((t20 - 0.7f64.powi(20) * 1e4).abs() < 1e-12);
        assert!((t20 - 7.979).abs() < 1e-3);
        assert!(!ppm_stop_test(10.0, 1.0, 20, &p));
        assert!(ppm_stop_test(0.0, 1e-3, 50, &p));
        assert!(PpmParams::new(1.0, 1e-4, 1e-10, 10).is_err());
        assert_eq!(p.strict().tau_1, 1.0);
    }

    #[test]
    fn natural_residual_formula() {
        // Two opposite arcs between two nodes.
        let g = Graph::new(2, &[(0, 1), (1, 0)], vec![1.0, 3.0]).unwrap();
        let prob = Problem::new(g, vec![-2.0, 2.0]).unwrap();
        let reg = RegParams::new(0.5, 0.25).unwrap();
        let anchor = Anchor {
            x: vec![1.0, 0.0],
            y: vec![0.0, 1.0],
            k: 3,
        };
        let (x, y) = ([0.5, 2.0], [1.0, -1.0]);
        // grad_e = rho (x - x_k) + c - (y_head - y_tail)
        let g0: f64 = 0.5 * (0.5 - 1.0) + 1.0 - (-1.0 - 1.0);
        let g1: f64 = 0.5 * 2.0 + 3.0 - (1.0 - -1.0);
        let r0 = 0.5 - (0.5 - g0).max(0.0);
        let r1 = 2.0 - (2.0 - g1).max(0.0);
        // A x - b + delta (y - y_k)
        let p0 = (-0.5 + 2.0) + 2.0 + 0.25 * 1.0;
        let p1 = (0.5 - 2.0) - 2.0 + 0.25 * (-2.0);
        let want = (r0 * r0 + r1 * r1 + p0 * p0 + p1 * p1).sqrt();
        let got = natural_residual(&x, &y, &anchor, &prob, &reg);
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn natural_residual_vanishes_at_subproblem_solution() {
        let prob = path_problem(vec![-1.0, 0.0, 1.0]);
        let reg = RegParams::default();
        let x = vec![0.8, 1.3];
        let y = vec![0.2, -0.4, 0.9];
        let aty = prob.graph().incidence_rmatvec(&y).unwrap();
        let ax = prob.graph().incidence_matvec(&x).unwrap();
        // Choose the anchor so that (x, y) is exactly stationary.
        let anchor = Anchor {
            x: (0..2).map(|e| x[e] + (1.0 - aty[e]) / reg.rho).collect(),
            y: (0..3)
                .map(|i| y[i] + (ax[i] - prob.load()[i]) / reg.delta)
                .collect(),
            k: 0,
        };
        assert!(natural_residual(&x, &y, &anchor, &prob, &reg) < 1e-9);
    }

    #[test]
    fn global_stop_cases() {
        let prob = path_problem(vec![-1.0, 0.0, 1.0]);
        assert_eq!(prob.scale(), 2.0);
        let (x, y, s) = (vec![1.0, 1.0], vec![0.0, 1.0, 2.0], vec![0.0, 0.0]);
        assert!(global_stop_test(&x, &y, &s, &prob, 1e-10));
        // x_0 s_0 = 1e-9 with both factors above 1e-9.
        let tol = 1e-10;
        let x_bad = vec![1.0, 1.0];
        let s_bad = vec![1e-9, 0.0];
        let y_bad = vec![0.0, 1.0 - 1e-9, 2.0 - 1e-9];
        let m = StopMeasures::compute(&x_bad, &y_bad, &s_bad, &prob);
        assert!(m.dual_infeasibility <= m.scale * tol);
        assert!(m.complementarity > tol);
        assert!(!global_stop_test(&x_bad, &y_bad, &s_bad, &prob, tol));
    }

    #[test]
    fn path_and_zero_load() {
        let prob = path_problem(vec![-1.0, 0.0, 1.0]);
        let sol = ps_ipm_solve(&prob, &SolverOptions::default()).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-8);
        assert!(sol.x.iter().all(|v| (v - 1.0).abs() < 1e-8));
        assert_eq!(sol.report.status, SolveStatus::Optimal);

        let zero = path_problem(vec![0.0; 3]);
        let sol = ps_ipm_solve(&zero, &SolverOptions::default()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.report.status, SolveStatus::Trivial);
    }

    #[test]
    fn hundred_nodes_match_oracle() {
        let prob = generate_problem(&GeneratorSpec::new(100, 11), 0.1).unwrap();
        let sol = ps_ipm_solve(&prob, &SolverOptions::default()).unwrap();
        let exact = solve_mcf_exact(&prob).unwrap().objective;
        assert!((sol.objective - exact).abs() <= 1e-6 * exact.abs().max(1.0));
    }
}
