use super::SparseSymmetric;

/// A symmetric permutation. `perm[new] = old` and `inverse[old] = new`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            perm: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    /// Panics if `perm` is not a permutation of `0..perm.len()`.
    pub fn from_vec(perm: Vec<usize>) -> Self {
        let mut inverse = vec![usize::MAX; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            assert!(
                old < perm.len() && inverse[old] == usize::MAX,
                "not a permutation"
            );
            inverse[old] = new;
        }
        Permutation { perm, inverse }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }
}

/// Fill estimates reported by the ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingStats {
    /// Estimated nonzeros of `L`, diagonal included.
    pub factor_nnz: f64,
    /// Estimated multiply-subtract count of the factorization.
    pub flops: f64,
}

/// Approximate-minimum-degree fill-reducing ordering of the symmetric
/// pattern. Deterministic for a fixed pattern.
pub fn analyze_order(s: &SparseSymmetric) -> Permutation {
    analyze_order_with_stats(s).0
}

pub fn analyze_order_with_stats(s: &SparseSymmetric) -> (Permutation, OrderingStats) {
    let n = s.dim();
    let (ptr, rows) = s.full_pattern();
    if rows.is_empty() {
        let stats = OrderingStats {
            factor_nnz: n as f64,
            flops: 0.0,
        };
        return (Permutation::identity(n), stats);
    }
    let ap: Vec<i64> = ptr.iter().map(|&v| v as i64).collect();
    let ai: Vec<i64> = rows.iter().map(|&v| v as i64).collect();
    let control = amd::Control::default();
    match amd::order::<i64>(n as i64, &ap, &ai, &control) {
        Ok((p, _, info)) => {
            let stats = OrderingStats {
                factor_nnz: (info.lnz + n) as f64,
                flops: info.n_mult_subs_ldl as f64,
            };
            (
                Permutation::from_vec(p.into_iter().map(|v| v as usize).collect()),
                stats,
            )
        }
        // The pattern is built sorted and duplicate-free, so AMD cannot reject it.
        Err(status) => unreachable!("AMD rejected a valid pattern: {status:?}"),
    }
}
