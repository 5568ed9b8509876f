//! Smallest transport problem: one unit of mass across a three-node path.
//!
//! Run with `cargo run --example path_graph`.

use sparse_ot::{ps_ipm_solve, Graph, Problem, SolverOptions};

fn main() -> sparse_ot::Result<()> {
    // 0 -> 1 -> 2 with unit costs; mass leaves node 0 and arrives at node 2.
    let graph = Graph::with_unit_costs(3, &[(0, 1), (1, 2)])?;
    let problem = Problem::new(graph, vec![-1.0, 0.0, 1.0])?;

    let sol = ps_ipm_solve(&problem, &SolverOptions::default())?;
    println!("objective  {:.10}", sol.objective);
    println!("flow       {:?}", sol.x);
    println!("potentials {:?}", sol.y);
    println!(
        "{} outer / {} interior point iterations",
        sol.report.outer_iterations(),
        sol.report.ipm_iterations()
    );
    Ok(())
}
