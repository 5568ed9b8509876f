//! Transport on a graph read from a Matrix Market pattern file.
//!
//! Pass a path to a symmetric `.mtx` file, or run without arguments to use
//! a small built-in matrix with a disconnected vertex.

use sparse_ot::io::{
    generate_load, parse_matrix_market, read_matrix_market_edges, LoadSpec, MtxOptions,
};
use sparse_ot::{ps_ipm_solve, Problem, SolverOptions};

const GRID: &str = "%%MatrixMarket matrix coordinate pattern symmetric
% 3x3 grid plus an isolated vertex 10 and diagonal entries
10 10 15
1 1
2 1
3 2
4 1
5 2
5 4
6 3
6 5
7 4
8 5
8 7
9 6
9 8
10 10
9 9
";

fn main() -> sparse_ot::Result<()> {
    let opts = MtxOptions {
        largest_component: true,
        weighted: false,
    };
    let parsed = match std::env::args().nth(1) {
        Some(path) => read_matrix_market_edges(path, opts)?,
        None => parse_matrix_market(GRID, opts)?,
    };
    println!(
        "{} nodes kept ({} dropped), {} arcs, {} diagonal entries ignored",
        parsed.graph.node_count(),
        parsed.nodes_dropped,
        parsed.graph.edge_count(),
        parsed.self_loops_dropped
    );
    let m = parsed.graph.node_count();
    let load = generate_load(
        m,
        &LoadSpec {
            nonzero_fraction: 0.3,
            seed: 9,
        },
    )?;
    let problem = Problem::new(parsed.graph, load)?;
    let sol = ps_ipm_solve(&problem, &SolverOptions::default())?;
    println!(
        "objective {:.8} (unit mass: {:.8})",
        sol.objective,
        sol.objective / problem.mass()
    );
    Ok(())
}
