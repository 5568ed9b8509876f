//! Sparse symmetric storage, orderings, direct and incomplete Cholesky,
//! conjugate gradients and spectral estimates.

pub mod cholesky;
pub mod ichol;
mod order;
pub mod pcg;
mod sparse;
pub mod spectral;

pub use cholesky::{
    cholesky, cholesky_with_symbolic, symbolic_cholesky, symbolic_factor_nnz, CholeskyFactor,
    FactorKind, SymbolicCholesky,
};
pub use ichol::{
    incomplete_cholesky, incomplete_cholesky_ordered, incomplete_cholesky_scaled,
    incomplete_cholesky_with_retry,
};
pub use order::{analyze_order, analyze_order_with_stats, OrderingStats, Permutation};
pub use pcg::{default_max_iterations, pcg, CgResult};
pub use sparse::SparseSymmetric;
pub use spectral::{lanczos_extremes, power_iteration};
