use crate::error::{Error, Result};

/// Symmetric matrix stored as its lower triangle in compressed-column form.
/// Every column starts with its diagonal entry; the remaining row indices are
/// strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    dim: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    pub fn new(
        dim: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Param("matrix dimension must be at least 1".into()));
        }
        if col_ptr.len() != dim + 1 || col_ptr[0] != 0 {
            return Err(Error::Format(
                "column pointer array has the wrong shape".into(),
            ));
        }
        if row_idx.len() != values.len() || *col_ptr.last().unwrap() != row_idx.len() {
            return Err(Error::Format("row index and value arrays disagree".into()));
        }
        for j in 0..dim {
            let (lo, hi) = (col_ptr[j], col_ptr[j + 1]);
            if hi <= lo || row_idx[lo] != j {
                return Err(Error::Format(format!(
                    "column {j} does not start with its diagonal"
                )));
            }
            for p in lo + 1..hi {
                if row_idx[p] <= row_idx[p - 1] || row_idx[p] >= dim {
                    return Err(Error::Format(format!(
                        "column {j} has unsorted or out-of-range rows"
                    )));
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("matrix has non-finite values".into()));
        }
        Ok(Self::from_parts_unchecked(dim, col_ptr, row_idx, values))
    }

    pub(crate) fn from_parts_unchecked(
        dim: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        SparseSymmetric {
            dim,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn identity(dim: usize) -> Self {
        SparseSymmetric {
            dim,
            col_ptr: (0..=dim).collect(),
            row_idx: (0..dim).collect(),
            values: vec![1.0; dim],
        }
    }

    /// Builds from a dense symmetric matrix, keeping the nonzeros of the
    /// lower triangle plus the full diagonal.
    pub fn from_dense(a: &[Vec<f64>]) -> Result<Self> {
        let dim = a.len();
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for j in 0..dim {
            if a[j].len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: a[j].len(),
                });
            }
            row_idx.push(j);
            values.push(a[j][j]);
            for (i, row) in a.iter().enumerate().skip(j + 1) {
                if row[j] != 0.0 {
                    row_idx.push(i);
                    values.push(row[j]);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self::new(dim, col_ptr, row_idx, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz_lower(&self) -> usize {
        self.row_idx.len()
    }

    /// `(row, value)` pairs of lower column `j`, diagonal first.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| self.values[self.col_ptr[j]])
            .collect()
    }

    /// Adds `shift[j]` to every diagonal entry.
    pub fn shift_diagonal(&self, shift: &[f64]) -> Self {
        let mut out = self.clone();
        for j in 0..self.dim {
            out.values[self.col_ptr[j]] += shift[j];
        }
        out
    }

    pub fn same_pattern(&self, other: &SparseSymmetric) -> bool {
        self.dim == other.dim && self.col_ptr == other.col_ptr && self.row_idx == other.row_idx
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for j in 0..self.dim {
            let lo = self.col_ptr[j];
            let hi = self.col_ptr[j + 1];
            let xj = x[j];
            let mut acc = self.values[lo] * xj;
            for p in lo + 1..hi {
                let i = self.row_idx[p];
                let v = self.values[p];
                y[i] += v * xj;
                acc += v * x[i];
            }
            y[j] += acc;
        }
    }

    /// `D S D` for `D = diag(d)`.
    pub fn scale_symmetric(&self, d: &[f64]) -> Self {
        let mut values = self.values.clone();
        for j in 0..self.dim {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                values[p] *= d[self.row_idx[p]] * d[j];
            }
        }
        SparseSymmetric {
            dim: self.dim,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values,
        }
    }

    /// Frobenius norm of the full symmetric matrix.
    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.dim {
            for (k, (_, v)) in self.column(j).enumerate() {
                acc += if k == 0 { v * v } else { 2.0 * v * v };
            }
        }
        acc.sqrt()
    }

    /// Euclidean norm of each full column (both triangles).
    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.dim];
        for j in 0..self.dim {
            for (k, (i, v)) in self.column(j).enumerate() {
                sq[j] += v * v;
                if k > 0 {
                    sq[i] += v * v;
                }
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.dim]; self.dim];
        for j in 0..self.dim {
            for (i, v) in self.column(j) {
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        a
    }

    /// Full symmetric pattern (both triangles, no diagonal) in compressed
    /// column form, as consumed by ordering routines.
    pub(crate) fn full_pattern(&self) -> (Vec<usize>, Vec<usize>) {
        let mut count = vec![0usize; self.dim + 1];
        for j in 0..self.dim {
            for (i, _) in self.column(j).skip(1) {
                count[i + 1] += 1;
                count[j + 1] += 1;
            }
        }
        for j in 0..self.dim {
            count[j + 1] += count[j];
        }
        let mut fill = count.clone();
        let mut rows = vec![0usize; count[self.dim]];
        for j in 0..self.dim {
            for (i, _) in self.column(j).skip(1) {
                rows[fill[j]] = i;
                fill[j] += 1;
                rows[fill[i]] = j;
                fill[i] += 1;
            }
        }
        for j in 0..self.dim {
            rows[count[j]..count[j + 1]].sort_unstable();
        }
        (count, rows)
    }

    /// Lower triangle of `P S P^T` in compressed-column form with sorted
    /// rows (diagonal first), where `inverse[old] = new`.
    pub(crate) fn permuted_lower(&self, inverse: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let n = self.dim;
        let mut count = vec![0usize; n + 1];
        for j in 0..n {
            for (i, _) in self.column(j) {
                count[inverse[i].min(inverse[j]) + 1] += 1;
            }
        }
        for j in 0..n {
            count[j + 1] += count[j];
        }
        let mut fill = count.clone();
        let mut entries = vec![(0usize, 0.0f64); count[n]];
        for j in 0..n {
            for (i, v) in self.column(j) {
                let (a, b) = (inverse[i], inverse[j]);
                let col = a.min(b);
                entries[fill[col]] = (a.max(b), v);
                fill[col] += 1;
            }
        }
        for j in 0..n {
            entries[count[j]..count[j + 1]].sort_unstable_by_key(|e| e.0);
        }
        let (rows, vals) = entries.into_iter().unzip();
        (count, rows, vals)
    }

    /// Upper triangle of `P S P^T` in compressed-column form, where
    /// `inverse[old] = new`.
    pub(crate) fn permuted_upper(&self, inverse: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let n = self.dim;
        let mut count = vec![0usize; n + 1];
        for j in 0..n {
            for (i, _) in self.column(j) {
                let (a, b) = (inverse[i], inverse[j]);
                count[a.max(b) + 1] += 1;
            }
        }
        for j in 0..n {
            count[j + 1] += count[j];
        }
        let mut fill = count.clone();
        let mut rows = vec![0usize; count[n]];
        let mut vals = vec![0.0; count[n]];
        for j in 0..n {
            for (i, v) in self.column(j) {
                let (a, b) = (inverse[i], inverse[j]);
                let col = a.max(b);
                rows[fill[col]] = a.min(b);
                vals[fill[col]] = v;
                fill[col] += 1;
            }
        }
        (count, rows, vals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SparseSymmetric::new(0, vec![0], vec![], vec![]).is_err());
        // missing diagonal in column 1
        assert!(SparseSymmetric::new(2, vec![0, 2, 2], vec![0, 1], vec![1.0, 2.0]).is_err());
        assert!(SparseSymmetric::new(1, vec![0, 1], vec![0], vec![f64::NAN]).is_err());
        let s = SparseSymmetric::new(2, vec![0, 2, 3], vec![0, 1, 1], vec![4.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.to_dense(), vec![vec![4.0, 2.0], vec![2.0, 3.0]]);
        assert_eq!(s.matvec(&[1.0, 1.0]), vec![6.0, 5.0]);
        assert!((s.frobenius_norm() - (16.0f64 + 8.0 + 9.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dense_round_trip() {
        let a = vec![
            vec![4.0, -1.0, 0.0],
            vec![-1.0, 4.0, -2.0],
            vec![0.0, -2.0, 5.0],
        ];
        let s = SparseSymmetric::from_dense(&a).unwrap();
        assert_eq!(s.nnz_lower(), 5);
        assert_eq!(s.to_dense(), a);
        let (p, r) = s.full_pattern();
        assert_eq!(p, vec![0, 1, 3, 4]);
        assert_eq!(r, vec![1, 0, 2, 1]);
    }
}
