//! Exact uncapacitated min-cost flow by successive shortest paths.
//!
//! Costs and loads are scaled by a common power of ten to integers and all
//! arithmetic runs in `i128`, so conservation and the reduced-cost
//! certificate are checked exactly.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::problem::Problem;

/// Largest power of ten tried when scaling inputs to integers.
pub const MAX_DECIMALS: u32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    /// Nonnegative flow per edge.
    pub flow: Vec<f64>,
    /// Node potentials `y` with `c_e - y_head + y_tail >= 0` on every edge,
    /// equality where the flow is positive.
    pub potential: Vec<f64>,
    pub objective: f64,
    /// Inputs were multiplied by `10^decimals` before solving.
    pub decimals: u32,
}

fn scaled(v: f64, factor: f64) -> Option<i128> {
    let s = v * factor;
    if !s.is_finite() || s.abs() > 1e17 {
        return None;
    }
    let r = s.round();
    (r / factor == v).then_some(r as i128)
}

fn all_scaled(vals: &[f64], factor: f64) -> Option<Vec<i128>> {
    vals.iter().map(|&v| scaled(v, factor)).collect()
}

/// Smallest `k <= MAX_DECIMALS` with `10^k * v` integral for all costs
/// and loads.
pub fn integral_decimals(prob: &Problem) -> Option<u32> {
    (0..=MAX_DECIMALS).find(|&k| {
        let f = 10f64.powi(k as i32);
        all_scaled(prob.costs(), f).is_some() && all_scaled(prob.load(), f).is_some()
    })
}

pub fn solve_mcf_exact(prob: &Problem) -> Result<FlowSolution> {
    let k = integral_decimals(prob).ok_or_else(|| {
        Error::Param(format!(
            "costs and loads must be integers after scaling by at most 10^{MAX_DECIMALS}"
        ))
    })?;
    let factor = 10f64.powi(k as i32);
    let cost = all_scaled(prob.costs(), factor).expect("checked");
    let load = all_scaled(prob.load(), factor).expect("checked");
    if load.iter().sum::<i128>() != 0 {
        return Err(Error::Infeasible("load does not sum to zero".into()));
    }
    let g = prob.graph();
    let m = g.node_count();
    let adj = g.adjacency();
    // excess > 0: mass still to send (b < 0); excess < 0: unmet demand
    let mut excess: Vec<i128> = load.iter().map(|b| -b).collect();
    let mut flow = vec![0i128; g.edge_count()];
    let mut pot = vec![0i128; m];
    let mut dist = vec![i128::MAX; m];
    let mut pred: Vec<Option<(usize, bool)>> = vec![None; m];
    let mut done = vec![false; m];
    let mut heap = BinaryHeap::new();

    while excess.iter().any(|&e| e > 0) {
        dist.fill(i128::MAX);
        pred.fill(None);
        done.fill(false);
        heap.clear();
        for v in 0..m {
            if excess[v] > 0 {
                dist[v] = 0;
                heap.push(Reverse((0i128, v)));
            }
        }
        let mut sink = None;
        while let Some(Reverse((d, v))) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            if excess[v] < 0 {
                sink = Some((v, d));
                break;
            }
            for &(w, e) in adj.neighbors(v) {
                // forward along e when v is its tail, backward when v is its head
                let forward = g.tail(e) == v;
                if !forward && flow[e] == 0 {
                    continue;
                }
                let rc = if forward {
                    cost[e] + pot[v] - pot[w]
                } else {
                    -cost[e] + pot[v] - pot[w]
                };
                debug_assert!(rc >= 0);
                let nd = d + rc;
                if nd < dist[w] {
                    dist[w] = nd;
                    pred[w] = Some((e, forward));
                    heap.push(Reverse((nd, w)));
                }
            }
        }
        let (t, dt) = sink
            .ok_or_else(|| Error::Infeasible("remaining supply cannot reach any demand".into()))?;
        for v in 0..m {
            pot[v] += dist[v].min(dt);
        }
        let mut amount = -excess[t];
        let mut v = t;
        while let Some((e, forward)) = pred[v] {
            if forward {
                v = g.tail(e);
            } else {
                amount = amount.min(flow[e]);
                v = g.head(e);
            }
        }
        amount = amount.min(excess[v]);
        let source = v;
        let mut v = t;
        while let Some((e, forward)) = pred[v] {
            if forward {
                flow[e] += amount;
                v = g.tail(e);
            } else {
                flow[e] -= amount;
                v = g.head(e);
            }
        }
        excess[source] -= amount;
        excess[t] += amount;
    }

    let objective: i128 = cost.iter().zip(&flow).map(|(c, x)| c * x).sum();
    let f2 = factor * factor;
    // Potentials are free up to a constant; anchor the smallest at zero.
    let base = pot.iter().copied().min().unwrap_or(0);
    Ok(FlowSolution {
        flow: flow.iter().map(|&x| x as f64 / factor).collect(),
        potential: pot.iter().map(|&p| (p - base) as f64 / factor).collect(),
        objective: objective as f64 / f2,
        decimals: k,
    })
}

/// Exact check of conservation, nonnegativity, dual feasibility and
/// complementary slackness. Values not representable at the problem's
/// decimal scale fail.
pub fn verify_certificate(prob: &Problem, sol: &FlowSolution) -> bool {
    let Some(k) = integral_decimals(prob) else {
        return false;
    };
    let factor = 10f64.powi(k.max(sol.decimals) as i32);
    let (Some(cost), Some(load), Some(flow), Some(pot)) = (
        all_scaled(prob.costs(), factor),
        all_scaled(prob.load(), factor),
        all_scaled(&sol.flow, factor),
        all_scaled(&sol.potential, factor),
    ) else {
        return false;
    };
    let g = prob.graph();
    if flow.len() != g.edge_count() || pot.len() != g.node_count() {
        return false;
    }
    let mut balance = vec![0i128; g.node_count()];
    for (e, (t, h)) in g.edges().enumerate() {
        if flow[e] < 0 {
            return false;
        }
        balance[t] -= flow[e];
        balance[h] += flow[e];
        let rc = cost[e] - pot[h] + pot[t];
        if rc < 0 || (flow[e] > 0 && rc != 0) {
            return false;
        }
    }
    balance == load
}

/// Largest violation of the optimality conditions by a floating-point
/// primal-dual pair, relative to the problem scale: conservation (1-norm),
/// negative flow, negative reduced cost and `x_e * r_e`.
pub fn certificate_violation(prob: &Problem, flow: &[f64], potential: &[f64]) -> f64 {
    let g = prob.graph();
    let mut ax = vec![0.0; g.node_count()];
    g.incidence_matvec_into(flow, &mut ax);
    let conservation: f64 = ax.iter().zip(prob.load()).map(|(a, b)| (a - b).abs()).sum();
    let mut worst = conservation;
    for (e, (t, h)) in g.edges().enumerate() {
        let rc = g.costs()[e] - potential[h] + potential[t];
        worst = worst.max(-flow[e]).max(-rc).max((flow[e] * rc).abs());
    }
    worst / prob.scale()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::io::{generate_problem, GeneratorSpec};

    fn path() -> Problem {
        let g = Graph::with_unit_costs(3, &[(0, 1), (1, 2)]).unwrap();
        Problem::new(g, vec![-1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn path_graph() {
        let s = solve_mcf_exact(&path()).unwrap();
        assert_eq!(s.flow, vec![1.0, 1.0]);
        assert_eq!(s.objective, 2.0);
        assert!(verify_certificate(&path(), &s));
    }

    #[test]
    fn zero_load() {
        let g = Graph::with_unit_costs(3, &[(0, 1), (1, 2)]).unwrap();
        let p = Problem::new(g, vec![0.0; 3]).unwrap();
        let s = solve_mcf_exact(&p).unwrap();
        assert_eq!(s.objective, 0.0);
        assert!(s.flow.iter().all(|x| *x == 0.0));
        assert!(verify_certificate(&p, &s));
    }

    #[test]
    fn perturbed_flow_fails() {
        let p = generate_problem(&GeneratorSpec::new(200, 4), 0.1).unwrap();
        let mut s = solve_mcf_exact(&p).unwrap();
        assert!(verify_certificate(&p, &s));
        let e = s.flow.iter().position(|x| *x > 0.0).unwrap();
        s.flow[e] += 1.0;
        assert!(!verify_certificate(&p, &s));
    }

    #[test]
    fn decimal_inputs() {
        let g = Graph::new(3, &[(0, 1), (1, 2), (0, 2)], vec![0.25, 0.5, 0.8]).unwrap();
        let p = Problem::new(g, vec![-0.5, 0.0, 0.5]).unwrap();
        let s = solve_mcf_exact(&p).unwrap();
        assert_eq!(s.decimals, 2);
        assert_eq!(s.flow, vec![0.5, 0.5, 0.0]);
        assert!((s.objective - 0.375).abs() < 1e-15);
        assert!(verify_certificate(&p, &s));
    }

    /// Basic feasible solutions of `A x = b, x >= 0` are spanning trees
    /// with nonnegative tree flow; the LP optimum is the best of them.
    fn enumerate_vertices(prob: &Problem) -> f64 {
        let g = prob.graph();
        let (m, n) = (g.node_count(), g.edge_count());
        let mut best = f64::INFINITY;
        let mut chosen = Vec::new();
        fn rec(
            start: usize,
            chosen: &mut Vec<usize>,
            need: usize,
            n: usize,
            visit: &mut dyn FnMut(&[usize]),
        ) {
            if chosen.len() == need {
                visit(chosen);
                return;
            }
            for e in start..n {
                chosen.push(e);
                rec(e + 1, chosen, need, n, visit);
                chosen.pop();
            }
        }
        let mut visit = |tree: &[usize]| {
            // peel leaves: a leaf's tree edge carries its remaining load
            let mut load = prob.load().to_vec();
            let mut alive = tree.to_vec();
            let mut flow = vec![0.0; n];
            while !alive.is_empty() {
                let mut deg = vec![0; m];
                for &e in &alive {
                    deg[g.tail(e)] += 1;
                    deg[g.head(e)] += 1;
                }
                let Some(pos) = alive
                    .iter()
                    .position(|&e| deg[g.tail(e)] == 1 || deg[g.head(e)] == 1)
                else {
                    return; // contains a cycle
                };
                let e = alive.swap_remove(pos);
                let (t, h) = (g.tail(e), g.head(e));
                if deg[h] == 1 {
                    flow[e] = load[h];
                    load[t] += load[h];
                    load[h] = 0.0;
                } else {
                    flow[e] = -load[t];
                    load[h] += load[t];
                    load[t] = 0.0;
                }
            }
            if load.iter().any(|v| v.abs() > 1e-12) || flow.iter().any(|x| *x < -1e-12) {
                return;
            }
            best = best.min(prob.objective(&flow));
        };
        rec(0, &mut chosen, m - 1, n, &mut visit);
        best
    }

    #[test]
    fn matches_vertex_enumeration_on_six_nodes() {
        for seed in 0..20 {
            let mut spec = GeneratorSpec::new(6, seed);
            spec.degree_avg = 2.5;
            let g0 = crate::io::generate_graph(&spec).unwrap();
            // vary costs so the optimum is not a pure hop count
            let costs: Vec<f64> = (0..g0.edge_count())
                .map(|e| ((e * 7 + seed as usize) % 5 + 1) as f64)
                .collect();
            let g = Graph::new(6, &g0.edges().collect::<Vec<_>>(), costs).unwrap();
            let b = crate::io::generate_load(
                6,
                &crate::io::LoadSpec {
                    nonzero_fraction: 0.5,
                    seed,
                },
            )
            .unwrap();
            let p = Problem::new(g, b).unwrap();
            let s = solve_mcf_exact(&p).unwrap();
            assert!(verify_certificate(&p, &s));
            assert_eq!(s.objective, enumerate_vertices(&p), "seed {seed}");
        }
    }
}
