//! The three normal-equation backends on one generated instance.
//!
//! `cargo run --release --example backends -- 3000`

use sparse_ot::io::{generate_problem, GeneratorSpec};
use sparse_ot::{ps_ipm_solve, Backend, BackendChoice, SolverOptions};

fn main() -> sparse_ot::Result<()> {
    let nodes = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(2000);
    let problem = generate_problem(&GeneratorSpec::new(nodes, 11), 0.1)?;
    println!(
        "{} nodes, {} arcs, mass {}",
        problem.node_count(),
        problem.edge_count(),
        problem.mass()
    );
    println!(
        "{:<22} {:>20} {:>6} {:>7} {:>9} {:>12}",
        "backend", "objective", "ipm", "pcg", "time_s", "max zeta/b"
    );
    for backend in Backend::ALL {
        let mut opts = SolverOptions::default();
        opts.normal.backend = BackendChoice::Fixed(backend);
        let sol = ps_ipm_solve(&problem, &opts)?;
        let r = &sol.report;
        println!(
            "{:<22} {:>20.10} {:>6} {:>7} {:>9.3} {:>12.3e}",
            backend.as_str(),
            sol.objective,
            r.ipm_iterations(),
            r.pcg_iterations(),
            r.time.as_secs_f64(),
            r.zeta_ratio_max()
        );
    }
    Ok(())
}
