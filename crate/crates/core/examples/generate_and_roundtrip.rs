//! Instance generation for every graph family, written to DIMACS text and
//! read back.

use sparse_ot::io::{generate_problem, parse_dimacs, to_dimacs, Family, GeneratorSpec};

fn main() -> sparse_ot::Result<()> {
    for family in [
        Family::Uniform,
        Family::Pref,
        Family::Kleinberg,
        Family::SmallWorld,
        Family::ErdosRenyi,
    ] {
        let spec = GeneratorSpec {
            family,
            ..GeneratorSpec::new(2000, 42)
        };
        let problem = generate_problem(&spec, 0.1)?;
        let degrees: Vec<usize> = problem.graph().degrees().iter().map(|d| d / 2).collect();
        let mean = degrees.iter().sum::<usize>() as f64 / degrees.len() as f64;
        let text = to_dimacs(&problem);
        let back = parse_dimacs(&text)?;
        println!(
            "{:<10} arcs {:>6}  mean degree {:.2}  max degree {:>3}  supply nodes {:>3}  round trip {}",
            family.as_str(),
            problem.edge_count(),
            mean,
            degrees.iter().max().unwrap(),
            problem.load().iter().filter(|b| **b != 0.0).count(),
            if back == problem { "ok" } else { "MISMATCH" }
        );
    }
    let small = generate_problem(&GeneratorSpec::new(4, 1), 0.5)?;
    print!("\n{}", to_dimacs(&small));
    Ok(())
}
