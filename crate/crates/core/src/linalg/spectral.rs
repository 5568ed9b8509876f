//! Eigenvalue estimates for symmetric operators given as matrix-vector
//! products.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn random_unit(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);
    v
}

/// Largest eigenvalue of a positive semidefinite operator by power
/// iteration. Returns the last Rayleigh quotient, a lower bound on the
/// true value.
pub fn power_iteration<F>(
    mut apply: F,
    dim: usize,
    max_iterations: usize,
    rel_tol: f64,
    seed: u64,
) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return 0.0;
    }
    let mut v = random_unit(dim, seed);
    let mut w = vec![0.0; dim];
    let mut estimate = 0.0;
    for _ in 0..max_iterations {
        apply(&v, &mut w);
        let rq = dot(&v, &w);
        let norm = normalize(&mut w);
        if norm == 0.0 {
            return 0.0;
        }
        std::mem::swap(&mut v, &mut w);
        let done = (rq - estimate).abs() <= rel_tol * rq.abs();
        estimate = rq;
        if done {
            break;
        }
    }
    estimate
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        d = diag[i] - x - if i == 0 { 0.0 } else { b2 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (x.abs() + 1.0);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `index`-th smallest eigenvalue of a symmetric tridiagonal matrix by
/// bisection.
pub(crate) fn tridiagonal_eigenvalue(diag: &[f64], off: &[f64], index: usize) -> f64 {
    let k = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r =
            if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < k { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Extreme eigenvalue estimates `(min, max)` of a symmetric operator from
/// `steps` Lanczos iterations with full reorthogonalization. Both are Ritz
/// values, so they lie inside the true spectrum interval.
pub fn lanczos_extremes<F>(mut apply: F, dim: usize, steps: usize, seed: u64) -> (f64, f64)
where
    F: FnMut(&[f64], &mut [f64]),
{
    let steps = steps.min(dim).max(1);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut diag = Vec::with_capacity(steps);
    let mut off: Vec<f64> = Vec::with_capacity(steps);
    let mut v = random_unit(dim, seed);
    let mut w = vec![0.0; dim];
    for j in 0..steps {
        apply(&v, &mut w);
        let a = dot(&v, &w);
        diag.push(a);
        basis.push(v.clone());
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = normalize(&mut w);
        if j + 1 == steps || b <= 1e-12 * a.abs().max(1e-300) {
            break;
        }
        off.push(b);
        std::mem::swap(&mut v, &mut w);
    }
    let k = diag.len();
    (
        tridiagonal_eigenvalue(&diag, &off, 0),
        tridiagonal_eigenvalue(&diag, &off, k - 1),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        let d: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..x.len() {
                y[i] = d[i] * x[i];
            }
        };
        let (lo, hi) = lanczos_extremes(apply, 20, 20, 3);
        assert!(
            (lo - 1.0).abs() < 1e-9 && (hi - 20.0).abs() < 1e-9,
            "{lo} {hi}"
        );
        let top = power_iteration(apply, 20, 2000, 1e-12, 3);
        assert!(top <= 20.0 + 1e-12 && top > 19.9);
    }

    #[test]
    fn tridiagonal_path_laplacian() {
        // eigenvalues of the path Laplacian P_n: 2 - 2cos(pi k / n)
        let n = 10;
        let mut diag = vec![2.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        let off = vec![-1.0; n - 1];
        for k in 0..n {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / n as f64).cos();
            assert!((tridiagonal_eigenvalue(&diag, &off, k) - exact).abs() < 1e-12);
        }
    }
}
