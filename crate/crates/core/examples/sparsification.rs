//! How much of the normal matrix survives sparsification, and how far the
//! sparsified matrix is from the full one compared with the a-priori bound.

use sparse_ot::io::{generate_problem, GeneratorSpec};
use sparse_ot::sparsify::sparsification_gap;
use sparse_ot::{ps_ipm_solve_observed, Backend, BackendChoice, SolverOptions};

fn main() -> sparse_ot::Result<()> {
    let problem = generate_problem(&GeneratorSpec::new(400, 5), 0.1)?;
    let mut opts = SolverOptions::default();
    opts.normal.backend = BackendChoice::Fixed(Backend::SparsifiedCholesky);
    let (rho, c_t) = (opts.reg.rho, opts.normal.sparsify.c_t);
    let g = problem.graph();

    println!(
        "{:>4} {:>10} {:>8} {:>12} {:>12}",
        "it", "mu", "kept", "gap", "bound"
    );
    ps_ipm_solve_observed(&problem, &opts, &mut |view| {
        let solver = view.solver;
        let (Some(full), Some(used)) = (solver.full_weights(), solver.used_weights()) else {
            return;
        };
        let mu = view.record.mu;
        let est = sparsification_gap(g, full, used, mu, rho, c_t);
        println!(
            "{:>4} {:>10.3e} {:>8} {:>12.4e} {:>12.4e}",
            view.record.outer,
            mu,
            used.kept(),
            est.gap,
            est.bound
        );
    })?;
    Ok(())
}
