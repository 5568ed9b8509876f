//! Threshold incomplete Cholesky factorization (left-looking).

use super::cholesky::{CholeskyFactor, FactorKind};
use super::{Permutation, SparseSymmetric};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Incomplete factor in the natural ordering. See
/// [`incomplete_cholesky_ordered`].
pub fn incomplete_cholesky(s: &SparseSymmetric, drop_tol: f64) -> Result<CholeskyFactor> {
    incomplete_cholesky_ordered(s, &Permutation::identity(s.dim()), drop_tol)
}

/// Incomplete factor of `P S P^T`. An off-diagonal `L_ij` is dropped when
/// `|L_ij| < drop_tol * ||S(:, j)||_2`; diagonals are always kept.
/// `drop_tol = 0` keeps all fill and reproduces the complete factor.
pub fn incomplete_cholesky_ordered(
    s: &SparseSymmetric,
    order: &Permutation,
    drop_tol: f64,
) -> Result<CholeskyFactor> {
    if !(drop_tol >= 0.0) || !drop_tol.is_finite() {
        return Err(Error::Param(format!(
            "drop tolerance must be non-negative, got {drop_tol}"
        )));
    }
    let n = s.dim();
    let (bp, bi, bx) = s.permuted_lower(order.inverse());
    let norms_orig = s.column_norms();
    let perm = order.as_slice();

    let mut lp = Vec::with_capacity(n + 1);
    let mut li: Vec<usize> = Vec::with_capacity(bi.len());
    let mut lx: Vec<f64> = Vec::with_capacity(bi.len());
    lp.push(0);

    // Row-linked lists of columns k < j whose next unused entry sits in row j.
    let mut head = vec![NONE; n];
    let mut next = vec![NONE; n];
    let mut pos = vec![0usize; n];

    let mut w = vec![0.0f64; n];
    let mut marked = vec![false; n];
    let mut pattern: Vec<usize> = Vec::new();

    for j in 0..n {
        pattern.clear();
        for p in bp[j]..bp[j + 1] {
            let i = bi[p];
            w[i] += bx[p];
            if !marked[i] {
                marked[i] = true;
                pattern.push(i);
            }
        }
        let mut k = head[j];
        head[j] = NONE;
        while k != NONE {
            let knext = next[k];
            let p = pos[k];
            let ljk = lx[p];
            let end = lp[k + 1];
            for q in p..end {
                let i = li[q];
                w[i] -= lx[q] * ljk;
                if !marked[i] {
                    marked[i] = true;
                    pattern.push(i);
                }
            }
            pos[k] = p + 1;
            if p + 1 < end {
                let r = li[p + 1];
                next[k] = head[r];
                head[r] = k;
            }
            k = knext;
        }

        let diag = w[j];
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::Breakdown {
                column: j,
                pivot: diag,
            });
        }
        let ljj = diag.sqrt();
        let threshold = drop_tol * norms_orig[perm[j]];
        let start = li.len();
        li.push(j);
        lx.push(ljj);
        pattern.sort_unstable();
        for &i in &pattern {
            if i > j {
                let v = w[i] / ljj;
                if v.abs() >= threshold {
                    li.push(i);
                    lx.push(v);
                }
            }
            w[i] = 0.0;
            marked[i] = false;
        }
        lp.push(li.len());
        if li.len() > start + 1 {
            pos[j] = start + 1;
            let r = li[start + 1];
            next[j] = head[r];
            head[r] = j;
        }
    }

    Ok(CholeskyFactor {
        perm: order.clone(),
        col_ptr: lp,
        row_idx: li,
        values: lx,
        kind: FactorKind::Incomplete,
        drop_tol,
    })
}

/// Incomplete factor of `P S P^T` computed on the unit-diagonal matrix
/// `D S D`, `D = diag(S)^{-1/2}`, and mapped back (`L = D^{-1} L_scaled`).
/// The drop test then compares entries relative to their own diagonal
/// scale, which keeps weakly coupled rows of badly scaled matrices.
pub fn incomplete_cholesky_scaled(
    s: &SparseSymmetric,
    order: &Permutation,
    drop_tol: f64,
) -> Result<CholeskyFactor> {
    let d: Vec<f64> = s.diagonal().iter().map(|v| 1.0 / v.sqrt()).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Breakdown {
            column: d.iter().position(|v| !v.is_finite()).unwrap_or(0),
            pivot: 0.0,
        });
    }
    let scaled = s.scale_symmetric(&d);
    let mut f = incomplete_cholesky_with_retry(&scaled, order, drop_tol)?;
    let perm = order.as_slice();
    for (p, &i) in f.row_idx.iter().enumerate() {
        f.values[p] /= d[perm[i]];
    }
    Ok(f)
}

/// Shift applied to the diagonal on the single breakdown retry, relative to
/// the diagonal itself.
pub const BREAKDOWN_SHIFT: f64 = 1e-8;

/// Incomplete factorization that retries once with `S + 1e-8 diag(S)` if
/// the first attempt breaks down.
pub fn incomplete_cholesky_with_retry(
    s: &SparseSymmetric,
    order: &Permutation,
    drop_tol: f64,
) -> Result<CholeskyFactor> {
    match incomplete_cholesky_ordered(s, order, drop_tol) {
        Err(Error::Breakdown { .. }) => {
            let shift: Vec<f64> = s
                .diagonal()
                .iter()
                .map(|d| BREAKDOWN_SHIFT * d.abs())
                .collect();
            incomplete_cholesky_ordered(&s.shift_diagonal(&shift), order, drop_tol)
        }
        other => other,
    }
}
