//! Instance generation and file formats.

pub mod dimacs;
pub mod generate;
pub mod mtx;
pub mod solution;

pub use dimacs::{parse_dimacs, read_dimacs_mcf, to_dimacs, write_dimacs_mcf};
pub use generate::{
    generate_graph, generate_load, generate_problem, Family, GeneratorSpec, LoadSpec,
};
pub use mtx::{parse_matrix_market, read_matrix_market_edges, MtxGraph, MtxOptions};
pub use solution::{read_solution, write_solution, SolutionFile};
