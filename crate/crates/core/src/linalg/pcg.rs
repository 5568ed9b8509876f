//! Preconditioned conjugate gradients.

use super::CholeskyFactor;
use crate::error::{Error, Result};

/// True residual is recomputed from scratch this often.
pub const RESIDUAL_REFRESH: usize = 50;

#[derive(Debug, Clone)]
pub struct CgResult {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `||b - S x|| / ||b||` of the returned solution.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Default iteration cap `min(m, ceil(10 sqrt(m)))`.
pub fn default_max_iterations(dim: usize) -> usize {
    let cap = (10.0 * (dim as f64).sqrt()).ceil() as usize;
    cap.min(dim).max(1)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `S x = b` from a zero start, with `apply(v, out)` computing
/// `out = S v`. Convergence is declared only once the true residual meets
/// `tol` relative to `||b||`.
pub fn pcg<F>(
    mut apply: F,
    b: &[f64],
    precond: Option<&CholeskyFactor>,
    tol: f64,
    max_iterations: usize,
) -> Result<CgResult>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if !bnorm.is_finite() {
        return Err(Error::Numerical("right-hand side is not finite".into()));
    }
    if bnorm == 0.0 {
        return Ok(CgResult {
            solution: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        });
    }
    let mut work = vec![0.0; n];
    let mut precondition = |r: &[f64], z: &mut [f64]| match precond {
        Some(f) => f.solve_into(r, z, &mut work),
        None => z.copy_from_slice(r),
    };

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    let true_residual = |apply: &mut F, x: &[f64], r: &mut [f64], q: &mut [f64]| {
        apply(x, q);
        for i in 0..n {
            r[i] = b[i] - q[i];
        }
    };

    for it in 1..=max_iterations {
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !pq.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite curvature at iteration {it}"
            )));
        }
        if pq <= 0.0 {
            return Err(Error::Numerical(format!(
                "operator is not positive definite (p'Sp = {pq:e}) at iteration {it}"
            )));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
        }
        if it % RESIDUAL_REFRESH == 0 {
            true_residual(&mut apply, &x, &mut r, &mut q);
        } else {
            for i in 0..n {
                r[i] -= alpha * q[i];
            }
        }
        let rel = norm(&r) / bnorm;
        if !rel.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite residual at iteration {it}"
            )));
        }
        if rel <= tol {
            true_residual(&mut apply, &x, &mut r, &mut q);
            let rel_true = norm(&r) / bnorm;
            if rel_true <= tol {
                return Ok(CgResult {
                    solution: x,
                    iterations: it,
                    relative_residual: rel_true,
                    converged: true,
                });
            }
            // Recurrence drifted: restart from the current iterate.
            precondition(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    true_residual(&mut apply, &x, &mut r, &mut q);
    let rel_true = norm(&r) / bnorm;
    Ok(CgResult {
        solution: x,
        iterations: max_iterations,
        relative_residual: rel_true,
        converged: rel_true <= tol,
    })
}
