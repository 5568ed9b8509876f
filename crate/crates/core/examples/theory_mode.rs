//! Theory mode: fixed centering, neighbourhood-enforcing step search and an
//! enforced inexactness budget, audited step by step through the observer.

use sparse_ot::io::{generate_problem, GeneratorSpec};
use sparse_ot::{ps_ipm_solve_observed, Mode, SolverOptions};

fn main() -> sparse_ot::Result<()> {
    let problem = generate_problem(&GeneratorSpec::new(500, 3), 0.1)?;
    let opts = SolverOptions {
        mode: Mode::Theory,
        ..SolverOptions::default()
    };

    let mut steps = 0;
    let mut worst_zeta = 0.0f64;
    let mut outside = 0;
    let sol = ps_ipm_solve_observed(&problem, &opts, &mut |view| {
        let r = view.record;
        steps += 1;
        worst_zeta = worst_zeta.max(r.zeta / r.zeta_budget);
        if !r.in_neighborhood {
            outside += 1;
        }
        println!(
            "k={:<3} j={:<3} mu {:>9.2e} -> {:>9.2e}  alpha {:.3}  zeta/budget {:.2e}",
            r.outer,
            r.inner,
            r.mu,
            r.mu_next,
            r.alpha,
            r.zeta / r.zeta_budget
        );
    })?;
    println!("objective {:.10} after {steps} steps", sol.objective);
    println!("largest zeta/budget {worst_zeta:.3e}, steps outside the neighbourhood: {outside}");
    Ok(())
}
