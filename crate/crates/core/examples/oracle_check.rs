//! Cross-checks the interior point solver against the exact min-cost-flow
//! oracle and its optimality certificate.

use sparse_ot::io::{generate_problem, GeneratorSpec};
use sparse_ot::oracle::{certificate_violation, solve_mcf_exact, verify_certificate};
use sparse_ot::{ps_ipm_solve, SolverOptions};

fn main() -> sparse_ot::Result<()> {
    println!(
        "{:>6} {:>6} {:>16} {:>10} {:>10} {:>10}",
        "nodes", "seed", "ipm objective", "oracle", "rel gap", "cert viol"
    );
    for (i, nodes) in [100, 300, 1000, 3000].into_iter().enumerate() {
        let seed = 100 + i as u64;
        let problem = generate_problem(&GeneratorSpec::new(nodes, seed), 0.1)?;
        let sol = ps_ipm_solve(&problem, &SolverOptions::default())?;
        let exact = solve_mcf_exact(&problem)?;
        assert!(verify_certificate(&problem, &exact));
        let gap = (sol.objective - exact.objective).abs() / exact.objective.max(1.0);
        // the interior solution certifies itself approximately
        let viol = certificate_violation(&problem, &sol.x, &sol.y);
        println!(
            "{nodes:>6} {seed:>6} {:>16.8} {:>10} {gap:>10.2e} {viol:>10.2e}",
            sol.objective, exact.objective
        );
    }
    Ok(())
}
