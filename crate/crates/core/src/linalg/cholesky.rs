//! Simplicial up-looking sparse Cholesky factorization.

use super::{Permutation, SparseSymmetric};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Complete,
    Incomplete,
}

/// Lower-triangular factor `L` with `P S P^T ≈ L L^T`. Columns are stored
/// diagonal first with increasing row indices.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub(crate) perm: Permutation,
    pub(crate) col_ptr: Vec<usize>,
    pub(crate) row_idx: Vec<usize>,
    pub(crate) values: Vec<f64>,
    pub(crate) kind: FactorKind,
    pub(crate) drop_tol: f64,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn drop_tol(&self) -> f64 {
        self.drop_tol
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Dense copy of `L` (in permuted coordinates).
    pub fn l_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut l = vec![vec![0.0; n]; n];
        for j in 0..n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                l[self.row_idx[p]][j] = self.values[p];
            }
        }
        l
    }

    /// Solves `(P^T L L^T P) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; b.len()];
        let mut work = vec![0.0; b.len()];
        self.solve_into(b, &mut out, &mut work);
        out
    }

    /// `y = L^{-1} P v`; together with [`Self::solve_upper_permuted`] this
    /// gives the split-preconditioned operator `L^{-1} P S P^T L^{-T}`.
    pub fn solve_lower_permuted_into(&self, v: &[f64], y: &mut [f64]) {
        let perm = self.perm.as_slice();
        for k in 0..self.dim() {
            y[k] = v[perm[k]];
        }
        self.forward(y);
    }

    /// `P^T L^{-T} x`.
    pub fn solve_upper_permuted(&self, x: &[f64]) -> Vec<f64> {
        let mut w = x.to_vec();
        self.backward(&mut w);
        let mut out = vec![0.0; w.len()];
        for (k, &p) in self.perm.as_slice().iter().enumerate() {
            out[p] = w[k];
        }
        out
    }

    fn forward(&self, work: &mut [f64]) {
        for j in 0..self.dim() {
            let lo = self.col_ptr[j];
            let hi = self.col_ptr[j + 1];
            let wj = work[j] / self.values[lo];
            work[j] = wj;
            for p in lo + 1..hi {
                work[self.row_idx[p]] -= self.values[p] * wj;
            }
        }
    }

    fn backward(&self, work: &mut [f64]) {
        for j in (0..self.dim()).rev() {
            let lo = self.col_ptr[j];
            let hi = self.col_ptr[j + 1];
            let mut acc = work[j];
            for p in lo + 1..hi {
                acc -= self.values[p] * work[self.row_idx[p]];
            }
            work[j] = acc / self.values[lo];
        }
    }

    pub fn solve_into(&self, b: &[f64], out: &mut [f64], work: &mut [f64]) {
        let n = self.dim();
        let perm = self.perm.as_slice();
        for k in 0..n {
            work[k] = b[perm[k]];
        }
        self.forward(work);
        self.backward(work);
        for k in 0..n {
            out[perm[k]] = work[k];
        }
    }
}

/// Elimination tree and column counts of `P S P^T`, reusable for every
/// matrix sharing the same sparsity pattern and ordering.
#[derive(Debug, Clone)]
pub struct SymbolicCholesky {
    perm: Permutation,
    parent: Vec<usize>,
    l_col_ptr: Vec<usize>,
}

impl SymbolicCholesky {
    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn factor_nnz(&self) -> usize {
        *self.l_col_ptr.last().unwrap_or(&0)
    }
}

fn etree(n: usize, ptr: &[usize], rows: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &r in &rows[ptr[k]..ptr[k + 1]] {
            let mut i = r;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L`, written to `stack[top..]`.
fn ereach(
    k: usize,
    ptr: &[usize],
    rows: &[usize],
    parent: &[usize],
    stack: &mut [usize],
    visited: &mut [usize],
) -> usize {
    let n = stack.len();
    let mut top = n;
    visited[k] = k;
    for &r in &rows[ptr[k]..ptr[k + 1]] {
        let mut i = r;
        if i > k {
            continue;
        }
        let mut len = 0;
        while visited[i] != k {
            stack[len] = i;
            len += 1;
            visited[i] = k;
            i = parent[i];
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

pub fn symbolic_cholesky(s: &SparseSymmetric, order: &Permutation) -> SymbolicCholesky {
    let n = s.dim();
    let (ptr, rows, _) = s.permuted_upper(order.inverse());
    let parent = etree(n, &ptr, &rows);
    let mut counts = vec![0usize; n];
    let mut stack = vec![0usize; n];
    let mut visited = vec![NONE; n];
    for k in 0..n {
        let top = ereach(k, &ptr, &rows, &parent, &mut stack, &mut visited);
        for &i in &stack[top..] {
            counts[i] += 1;
        }
        counts[k] += 1;
    }
    let mut l_col_ptr = vec![0usize; n + 1];
    for j in 0..n {
        l_col_ptr[j + 1] = l_col_ptr[j] + counts[j];
    }
    SymbolicCholesky {
        perm: order.clone(),
        parent,
        l_col_ptr,
    }
}

/// Number of nonzeros in the complete factor of `P S P^T`.
pub fn symbolic_factor_nnz(s: &SparseSymmetric, order: &Permutation) -> usize {
    symbolic_cholesky(s, order).factor_nnz()
}

/// Complete Cholesky factorization `P S P^T = L L^T`.
pub fn cholesky(s: &SparseSymmetric, order: &Permutation) -> Result<CholeskyFactor> {
    let sym = symbolic_cholesky(s, order);
    cholesky_with_symbolic(s, &sym)
}

/// Numeric factorization reusing a symbolic analysis of the same pattern.
pub fn cholesky_with_symbolic(
    s: &SparseSymmetric,
    sym: &SymbolicCholesky,
) -> Result<CholeskyFactor> {
    let n = s.dim();
    let (ptr, rows, vals) = s.permuted_upper(sym.perm.inverse());
    let lp = &sym.l_col_ptr;
    let nnz = lp[n];
    let mut li = vec![0usize; nnz];
    let mut lx = vec![0.0f64; nnz];
    let mut next = lp[..n].to_vec();
    let mut x = vec![0.0f64; n];
    let mut stack = vec![0usize; n];
    let mut visited = vec![NONE; n];

    for k in 0..n {
        let top = ereach(k, &ptr, &rows, &sym.parent, &mut stack, &mut visited);
        x[k] = 0.0;
        for p in ptr[k]..ptr[k + 1] {
            let i = rows[p];
            if i <= k {
                x[i] += vals[p];
            }
        }
        let mut d = x[k];
        x[k] = 0.0;
        for &i in &stack[top..] {
            let lki = x[i] / lx[lp[i]];
            x[i] = 0.0;
            for p in lp[i] + 1..next[i] {
                x[li[p]] -= lx[p] * lki;
            }
            d -= lki * lki;
            let p = next[i];
            next[i] += 1;
            li[p] = k;
            lx[p] = lki;
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite {
                column: k,
                pivot: d,
            });
        }
        let p = next[k];
        next[k] += 1;
        li[p] = k;
        lx[p] = d.sqrt();
    }
    Ok(CholeskyFactor {
        perm: sym.perm.clone(),
        col_ptr: lp.clone(),
        row_idx: li,
        values: lx,
        kind: FactorKind::Complete,
        drop_tol: 0.0,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::{weighted_laplacian, EdgeWeights, Graph};
    use crate::linalg::analyze_order;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_regularized_laplacian(
        m: usize,
        extra: usize,
        seed: u64,
    ) -> SparseSymmetric {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for v in 1..m {
            edges.push((rng.gen_range(0..v), v));
        }
        for _ in 0..extra {
            let a = rng.gen_range(0..m);
            let b = rng.gen_range(0..m);
            if a != b {
                edges.push((a, b));
            }
        }
        let g = Graph::with_unit_costs(m, &edges).unwrap();
        let w: Vec<f64> = (0..edges.len())
            .map(|_| 10f64.powf(rng.gen_range(-4.0..4.0)))
            .collect();
        weighted_laplacian(&g, &EdgeWeights::new(w).unwrap(), 1e-3).unwrap()
    }

    fn reconstruction_error(s: &SparseSymmetric, f: &CholeskyFactor) -> f64 {
        let n = s.dim();
        let l = f.l_dense();
        let a = s.to_dense();
        let perm = f.permutation().as_slice();
        let mut err = 0.0;
        for i in 0..n {
            for j in 0..n {
                let llt: f64 = (0..n).map(|k| l[i][k] * l[j][k]).sum();
                let d = llt - a[perm[i]][perm[j]];
                err += d * d;
            }
        }
        err.sqrt()
    }

    #[test]
    fn identity_factor() {
        let s = SparseSymmetric::identity(4);
        let f = cholesky(&s, &Permutation::identity(4)).unwrap();
        assert_eq!(f.l_dense(), s.to_dense());
        assert_eq!(f.kind(), FactorKind::Complete);
    }

    #[test]
    fn two_by_two() {
        let s = SparseSymmetric::from_dense(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let f = cholesky(&s, &Permutation::identity(2)).unwrap();
        let l = f.l_dense();
        assert_eq!(l[0], vec![2.0, 0.0]);
        assert_eq!(l[1][0], 1.0);
        assert!((l[1][1] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn indefinite_is_rejected() {
        let s = SparseSymmetric::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky(&s, &Permutation::identity(2)),
            Err(Error::NotPositiveDefinite { column: 1, .. })
        ));
    }

    #[test]
    fn random_laplacian_reconstruction() {
        for seed in 0..4 {
            let s = random_regularized_laplacian(50, 60, seed);
            let order = analyze_order(&s);
            let f = cholesky(&s, &order).unwrap();
            let err = reconstruction_error(&s, &f);
            assert!(err <= 1e-10 * s.frobenius_norm(), "seed {seed}: {err}");
            let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
            let x = f.solve(&b);
            let r = s.matvec(&x);
            let res: f64 = r
                .iter()
                .zip(&b)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-8 * s.frobenius_norm());
        }
    }

    #[test]
    fn symbolic_reuse() {
        let s = random_regularized_laplacian(40, 30, 9);
        let order = analyze_order(&s);
        let sym = symbolic_cholesky(&s, &order);
        let shifted = s.shift_diagonal(&vec![2.0; 40]);
        let a = cholesky_with_symbolic(&shifted, &sym).unwrap();
        let b = cholesky(&shifted, &order).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(sym.factor_nnz(), a.nnz());
    }
}
