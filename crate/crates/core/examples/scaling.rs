//! A small timing grid with the log-log fit of solve time against edges.
//!
//! `cargo run --release --example scaling -- 1000,3000,10000 3`

use sparse_ot::bench::{run_grid, summarize, write_csv, BenchGrid};
use sparse_ot::SolverOptions;

fn main() -> sparse_ot::Result<()> {
    let mut args = std::env::args().skip(1);
    let sizes: Vec<usize> = args
        .next()
        .map(|s| s.split(',').filter_map(|v| v.parse().ok()).collect())
        .unwrap_or_else(|| vec![500, 1000, 2000, 4000]);
    let repetitions = args.next().and_then(|r| r.parse().ok()).unwrap_or(3);
    let grid = BenchGrid {
        sizes,
        repetitions,
        seed: 0,
        load_fraction: 0.1,
        with_oracle: false,
    };
    let records = run_grid(&grid, &SolverOptions::default())?;
    write_csv(&mut std::io::stdout().lock(), &records)?;
    println!("\n{}", summarize(&records));
    Ok(())
}
