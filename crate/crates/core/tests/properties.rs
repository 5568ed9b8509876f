use std::collections::{BTreeSet, VecDeque};

use proptest::collection::vec;
use proptest::prelude::*;
use sparse_ot::io::{
    generate_graph, generate_load, generate_problem, parse_dimacs, to_dimacs, Family,
    GeneratorSpec, LoadSpec, SolutionFile,
};
use sparse_ot::linalg::{analyze_order, cholesky, incomplete_cholesky_scaled, pcg};
use sparse_ot::oracle::{solve_mcf_exact, verify_certificate};
use sparse_ot::sparsify::{
    sparsification_gap, sparsify_threshold, sparsify_weights, SparsifyParams,
};
use sparse_ot::{ps_ipm_solve, weighted_laplacian, EdgeWeights, Graph, Problem, SolverOptions};

/// Connected simple undirected graph: random tree plus extra edges.
fn undirected() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..24)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|v| 0..v).collect();
            (Just(n), parents, vec((0..n, 0..n), 0..2 * n))
        })
        .prop_map(|(n, parents, extra)| {
            let mut set = BTreeSet::new();
            for (i, p) in parents.into_iter().enumerate() {
                set.insert((p, i + 1));
            }
            for (a, b) in extra {
                if a != b {
                    set.insert((a.min(b), a.max(b)));
                }
            }
            (n, set.into_iter().collect())
        })
}

fn both_ways(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect()
}

fn weighted_graph() -> impl Strategy<Value = (Graph, Vec<f64>)> {
    undirected()
        .prop_flat_map(|(n, und)| {
            let arcs = both_ways(&und);
            let k = arcs.len();
            (Just(n), Just(arcs), vec(-6.0f64..6.0, k))
        })
        .prop_map(|(n, arcs, logw)| {
            let g = Graph::with_unit_costs(n, &arcs).unwrap();
            (g, logw.into_iter().map(|l| 10f64.powf(l)).collect())
        })
}

fn transport_problem() -> impl Strategy<Value = Problem> {
    undirected()
        .prop_flat_map(|(n, und)| {
            let arcs = both_ways(&und);
            let k = arcs.len();
            (Just(n), Just(arcs), vec(1u32..6, k), vec(-5i32..=5, n))
        })
        .prop_map(|(n, arcs, cost, mut load)| {
            let total: i32 = load[1..].iter().sum();
            load[0] = -total;
            let g = Graph::new(n, &arcs, cost.into_iter().map(f64::from).collect()).unwrap();
            Problem::new(g, load.into_iter().map(f64::from).collect()).unwrap()
        })
}

/// Cost of routing every load through a BFS tree: a feasible flow, so an
/// upper bound on the optimum.
fn tree_routing_cost(prob: &Problem) -> f64 {
    let g = prob.graph();
    let n = g.node_count();
    let mut arc = std::collections::HashMap::new();
    for (e, (t, h)) in g.edges().enumerate() {
        let c = g.costs()[e];
        let slot = arc.entry((t, h)).or_insert(c);
        *slot = f64::min(*slot, c);
    }
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([0]);
    parent[0] = 0;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for (t, h) in g.edges() {
            if t == v && parent[h] == usize::MAX {
                parent[h] = v;
                queue.push_back(h);
            }
        }
    }
    let mut demand = prob.load().to_vec();
    let mut cost = 0.0;
    for &v in order.iter().rev().filter(|&&v| v != 0) {
        let p = parent[v];
        let d = demand[v];
        if d > 0.0 {
            cost += d * arc[&(p, v)];
        } else if d < 0.0 {
            cost += -d * arc[&(v, p)];
        }
        demand[p] += d;
    }
    cost
}

fn dense_rows(g: &Graph, w: &[f64], delta: f64) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = delta;
    }
    for (e, (t, h)) in g.edges().enumerate() {
        a[t][t] += w[e];
        a[h][h] += w[e];
        a[t][h] -= w[e];
        a[h][t] -= w[e];
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn incidence_annihilates_constants((g, _) in weighted_graph(), x in vec(-10.0f64..10.0, 200)) {
        let x = &x[..g.edge_count().min(200)];
        prop_assume!(x.len() == g.edge_count());
        let ax = g.incidence_matvec(x).unwrap();
        let sum: f64 = ax.iter().sum();
        let scale: f64 = x.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!(sum.abs() <= 1e-12 * scale);
        let aty = g.incidence_rmatvec(&vec![3.25; g.node_count()]).unwrap();
        prop_assert!(aty.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn laplacian_matches_dense_assembly((g, w) in weighted_graph(), delta in 1e-8f64..1.0) {
        let s = weighted_laplacian(&g, &EdgeWeights::new(w.clone()).unwrap(), delta).unwrap();
        let want = dense_rows(&g, &w, delta);
        let got = s.to_dense();
        for (r, (gr, wr)) in got.iter().zip(&want).enumerate() {
            let scale = wr[r].abs();
            for (a, b) in gr.iter().zip(wr) {
                prop_assert!((a - b).abs() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn laplacian_rows_dominate_by_delta((g, w) in weighted_graph(), delta in 1e-8f64..1.0) {
        let s = weighted_laplacian(&g, &EdgeWeights::new(w).unwrap(), delta).unwrap();
        for (i, row) in s.to_dense().iter().enumerate() {
            let off: f64 = row.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.abs()).sum();
            let slack = row[i] - off;
            prop_assert!(slack > 0.0);
            prop_assert!((slack - delta).abs() <= 1e-12 * row[i].max(1.0), "slack {} delta {}", slack, delta);
        }
    }

    #[test]
    fn matrix_free_equals_assembled((g, w) in weighted_graph(), seed in any::<u64>()) {
        let w = EdgeWeights::new(w).unwrap();
        let s = weighted_laplacian(&g, &w, 1e-6).unwrap();
        let x: Vec<f64> = (0..g.node_count()).map(|i| ((i as u64 ^ seed) % 97) as f64 - 48.0).collect();
        let mut y = vec![0.0; x.len()];
        g.laplacian_apply(&w, 1e-6, &x, &mut y);
        let z = s.matvec(&x);
        let scale = w.max() * x.iter().map(|v| v.abs()).fold(1.0, f64::max) * 2.0 * g.max_degree() as f64;
        for (a, b) in y.iter().zip(&z) {
            prop_assert!((a - b).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn rayleigh_quotients_in_interval((g, w) in weighted_graph(), u in vec(-1.0f64..1.0, 24)) {
        let delta = 1e-6;
        let wmax = w.iter().cloned().fold(0.0, f64::max);
        let s = weighted_laplacian(&g, &EdgeWeights::new(w).unwrap(), delta).unwrap();
        let u = &u[..g.node_count()];
        let uu: f64 = u.iter().map(|v| v * v).sum();
        prop_assume!(uu > 1e-6);
        let su = s.matvec(u);
        let q = u.iter().zip(&su).map(|(a, b)| a * b).sum::<f64>() / uu;
        prop_assert!(q >= delta * (1.0 - 1e-9));
        prop_assert!(q <= (delta + wmax * 2.0 * g.max_degree() as f64) * (1.0 + 1e-9));
    }

    #[test]
    fn sparsification_is_idempotent_and_bounded(
        (g, w) in weighted_graph(),
        mu in 1e-8f64..10.0,
        c_t in 0.01f64..2.0,
    ) {
        let rho = 1e-4;
        let p = SparsifyParams::new(c_t, true).unwrap();
        let full = EdgeWeights::new(w).unwrap();
        let once = sparsify_weights(&full, mu, rho, p);
        let twice = sparsify_weights(&once, mu, rho, p);
        prop_assert_eq!(&once, &twice);
        let t = sparsify_threshold(mu, rho, c_t);
        for (a, b) in full.as_slice().iter().zip(once.as_slice()) {
            prop_assert!(*b == *a || (*b == 0.0 && *a < t));
            prop_assert!(*a < t || *b == *a);
        }
        let gap = sparsification_gap(&g, &full, &once, mu, rho, c_t);
        prop_assert!(gap.gap <= gap.bound * (1.0 + 1e-6), "{:?}", gap);
    }

    #[test]
    fn direct_and_iterative_solves((g, w) in weighted_graph(), seed in any::<u64>()) {
        let s = weighted_laplacian(&g, &EdgeWeights::new(w).unwrap(), 1e-3).unwrap();
        let b: Vec<f64> = (0..s.dim()).map(|i| (((i as u64).wrapping_mul(seed | 1) >> 7) % 13) as f64 - 6.0).collect();
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(bn > 0.0);
        let order = analyze_order(&s);
        let f = cholesky(&s, &order).unwrap();
        let x = f.solve(&b);
        let r: f64 = s.matvec(&x).iter().zip(&b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        // Backward stability: the residual is bounded by rounding on S x.
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(r <= 1e-13 * s.frobenius_norm() * xn, "direct residual {}", r / bn);

        let pre = incomplete_cholesky_scaled(&s, &order, 1e-3).unwrap();
        let out = pcg(|u, v| s.matvec_into(u, v), &b, Some(&pre), 1e-8, 10 * s.dim()).unwrap();
        // The reported residual is the true one and the flag is honest.
        let r: f64 = s.matvec(&out.solution).iter().zip(&b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        prop_assert!((out.relative_residual - r / bn).abs() <= 1e-6 * (r / bn) + 1e-15);
        prop_assert_eq!(out.converged, out.relative_residual <= 1e-8);
    }

    #[test]
    fn dimacs_round_trip(prob in transport_problem(), frac in 0u32..4) {
        // Exercise non-integral values too.
        let scale = [1.0, 0.5, 0.1, 1.0 / 3.0][frac as usize];
        let g = prob.graph();
        let edges: Vec<_> = g.edges().collect();
        let costs: Vec<f64> = g.costs().iter().map(|c| c * scale).collect();
        let prob = Problem::new(
            Graph::new(g.node_count(), &edges, costs).unwrap(),
            prob.load().to_vec(),
        ).unwrap();
        let back = parse_dimacs(&to_dimacs(&prob)).unwrap();
        prop_assert_eq!(back.load(), prob.load());
        prop_assert_eq!(back.costs(), prob.costs());
        prop_assert!(back.graph().edges().eq(prob.graph().edges()));
    }

    #[test]
    fn solution_file_round_trip(flow in vec(0.0f64..1e6, 0..30), pot in vec(-1e3f64..1e3, 1..30), obj in -1e9f64..1e9) {
        let sol = SolutionFile { objective: obj, flow: flow.clone(), potential: pot.clone() };
        let back = SolutionFile::parse(&sol.to_text(), flow.len(), pot.len()).unwrap();
        prop_assert_eq!(back, sol);
    }

    #[test]
    fn oracle_is_certified_and_below_tree_routing(prob in transport_problem()) {
        let sol = solve_mcf_exact(&prob).unwrap();
        prop_assert!(verify_certificate(&prob, &sol));
        prop_assert!((prob.objective(&sol.flow) - sol.objective).abs() <= 1e-9 * sol.objective.abs().max(1.0));
        prop_assert!(sol.objective <= tree_routing_cost(&prob) + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_loads_balance(m in 2usize..5000, seed in any::<u64>(), f in 0.01f64..1.0) {
        let b = generate_load(m, &LoadSpec { nonzero_fraction: f, seed }).unwrap();
        prop_assert_eq!(b.iter().sum::<f64>(), 0.0);
        let k = ((f * m as f64).ceil() as usize).clamp(2, m);
        prop_assert_eq!(b.iter().filter(|v| **v != 0.0).count(), k);
        prop_assert!(b.iter().all(|v| v.fract() == 0.0));
        prop_assert!(b.iter().filter(|v| **v < 0.0).all(|v| *v >= -10.0));
    }

    #[test]
    fn generated_graphs_are_connected_and_symmetric(m in 2usize..400, seed in any::<u64>(), fam in 0usize..5) {
        let family = [Family::Uniform, Family::Pref, Family::Kleinberg, Family::SmallWorld, Family::ErdosRenyi][fam];
        let spec = GeneratorSpec { family, ..GeneratorSpec::new(m, seed) };
        let g = generate_graph(&spec).unwrap();
        prop_assert_eq!(g.component_count(), 1);
        let arcs: BTreeSet<(usize, usize)> = g.edges().collect();
        prop_assert_eq!(arcs.len(), g.edge_count());
        for &(t, h) in &arcs {
            prop_assert!(t != h);
            prop_assert!(arcs.contains(&(h, t)));
        }
        let mut deg = vec![0usize; m];
        for (t, _) in g.edges() {
            deg[t] += 1;
        }
        if family == Family::Uniform {
            prop_assert!(deg.iter().all(|d| (1..=10).contains(d)));
        }
        prop_assert!(deg.iter().all(|d| *d >= 1));
    }

    #[test]
    fn solver_never_beats_the_oracle(m in 20usize..300, seed in any::<u64>()) {
        let prob = generate_problem(&GeneratorSpec::new(m, seed), 0.1).unwrap();
        let sol = ps_ipm_solve(&prob, &SolverOptions::default()).unwrap();
        let exact = solve_mcf_exact(&prob).unwrap().objective;
        prop_assert!(sol.objective >= exact - 1e-6 * exact.abs().max(1.0));
        prop_assert!((sol.objective - exact).abs() <= 1e-6 * exact.abs().max(1.0));
    }
}
