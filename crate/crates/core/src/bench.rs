//! Benchmark records, CSV output and the log-log scaling fit.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::io::{generate_problem, GeneratorSpec};
use crate::oracle::solve_mcf_exact;
use crate::ppm::{ps_ipm_solve, SolverOptions};
use crate::problem::Problem;
use crate::report::SolveReport;
use crate::sparsify::BackendChoice;

pub const CSV_HEADER: &str =
    "instance,m,n,backend,mode,outer_iters,ipm_iters,pcg_iters,time_s,objective,oracle_objective,zeta_ratio_max";

/// One solver run. `m` counts nodes and `n` edges.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub instance: String,
    pub m: usize,
    pub n: usize,
    pub backend: String,
    pub mode: String,
    pub outer_iters: usize,
    pub ipm_iters: usize,
    pub pcg_iters: usize,
    pub time_s: f64,
    /// NaN when the run did not converge.
    pub objective: f64,
    pub oracle_objective: Option<f64>,
    pub zeta_ratio_max: f64,
}

impl BenchRecord {
    pub fn converged(&self) -> bool {
        self.objective.is_finite()
    }

    pub fn csv_row(&self) -> String {
        let oracle = self
            .oracle_objective
            .map(|v| format!("{v}"))
            .unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{:.6},{},{},{:e}",
            self.instance,
            self.m,
            self.n,
            self.backend,
            self.mode,
            self.outer_iters,
            self.ipm_iters,
            self.pcg_iters,
            self.time_s,
            self.objective,
            oracle,
            self.zeta_ratio_max
        )
    }
}

pub fn write_csv<W: std::io::Write>(out: &mut W, records: &[BenchRecord]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Record of a finished run. `objective` is NaN for runs that did not
/// converge; `report` may still carry their iteration counts.
pub fn make_record(
    instance: &str,
    prob: &Problem,
    opts: &SolverOptions,
    report: Option<&SolveReport>,
    objective: f64,
    time_s: f64,
    oracle_objective: Option<f64>,
) -> BenchRecord {
    let backend = match opts.normal.backend {
        BackendChoice::Fixed(b) => b.to_string(),
        auto => auto.to_string(),
    };
    BenchRecord {
        instance: instance.to_string(),
        m: prob.node_count(),
        n: prob.edge_count(),
        backend,
        mode: opts.mode.to_string(),
        outer_iters: report.map_or(0, |r| r.outer_iterations()),
        ipm_iters: report.map_or(0, |r| r.ipm_iterations()),
        pcg_iters: report.map_or(0, |r| r.pcg_iterations()),
        time_s,
        objective,
        oracle_objective,
        zeta_ratio_max: report.map_or(f64::NAN, |r| r.zeta_ratio_max()),
    }
}

/// Solves `prob`, timing only the solver call.
pub fn run_instance(
    instance: &str,
    prob: &Problem,
    opts: &SolverOptions,
    with_oracle: bool,
) -> BenchRecord {
    let started = Instant::now();
    let result = ps_ipm_solve(prob, opts);
    let elapsed = started.elapsed().as_secs_f64();
    let oracle = if with_oracle {
        solve_mcf_exact(prob).ok().map(|s| s.objective)
    } else {
        None
    };
    match result {
        Ok(sol) => make_record(
            instance,
            prob,
            opts,
            Some(&sol.report),
            sol.objective,
            elapsed,
            oracle,
        ),
        Err(Error::NonConvergence { report, .. }) => make_record(
            instance,
            prob,
            opts,
            report.as_deref(),
            f64::NAN,
            elapsed,
            oracle,
        ),
        Err(e) => {
            log::warn!("{instance}: {e}");
            make_record(instance, prob, opts, None, f64::NAN, elapsed, oracle)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchGrid {
    pub sizes: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub load_fraction: f64,
    pub with_oracle: bool,
}

impl BenchGrid {
    /// Instance ids with their generator seeds, in output order.
    pub fn instances(&self) -> Vec<(String, GeneratorSpec)> {
        let mut out = Vec::new();
        for &m in &self.sizes {
            for rep in 0..self.repetitions {
                let seed = self.seed.wrapping_add(rep as u64);
                out.push((format!("n{m}-s{seed}"), GeneratorSpec::new(m, seed)));
            }
        }
        out
    }
}

/// Runs the grid on the current rayon pool; records come back in grid
/// order regardless of scheduling.
pub fn run_grid(grid: &BenchGrid, opts: &SolverOptions) -> Result<Vec<BenchRecord>> {
    grid.instances()
        .into_par_iter()
        .map(|(id, spec)| {
            let prob = generate_problem(&spec, grid.load_fraction)?;
            let rec = run_instance(&id, &prob, opts, grid.with_oracle);
            log::info!("{id}: {:.3}s, objective {}", rec.time_s, rec.objective);
            Ok(rec)
        })
        .collect()
}

/// Least-squares fit of `log(time) = intercept + slope * log(edges)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence interval of the slope; infinite with fewer than 3 points.
    pub slope_ci: (f64, f64),
    pub points: usize,
}

pub fn loglog_regression(xs: &[f64], ys: &[f64]) -> Option<Regression> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let k = pts.len();
    if k < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_ci = if k > 2 {
        let sse: f64 = pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        let se = (sse / (k - 2) as f64 / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, (k - 2) as f64)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::INFINITY);
        (slope - t * se, slope + t * se)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    Some(Regression {
        slope,
        intercept,
        slope_ci,
        points: k,
    })
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Spread> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
        };
        Some(Spread {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeSummary {
    pub m: usize,
    pub mean_edges: f64,
    pub runs: usize,
    pub converged: usize,
    pub time: Option<Spread>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub sizes: Vec<SizeSummary>,
    pub regression: Option<Regression>,
}

/// Per-size time spreads and the slope over all converged runs.
pub fn summarize(records: &[BenchRecord]) -> BenchSummary {
    let mut ms: Vec<usize> = records.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    let sizes = ms
        .iter()
        .map(|&m| {
            let rs: Vec<&BenchRecord> = records.iter().filter(|r| r.m == m).collect();
            let ok: Vec<f64> = rs
                .iter()
                .filter(|r| r.converged())
                .map(|r| r.time_s)
                .collect();
            SizeSummary {
                m,
                mean_edges: rs.iter().map(|r| r.n as f64).sum::<f64>() / rs.len() as f64,
                runs: rs.len(),
                converged: ok.len(),
                time: Spread::of(&ok),
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.converged())
        .map(|r| (r.n as f64, r.time_s))
        .unzip();
    BenchSummary {
        sizes,
        regression: loglog_regression(&xs, &ys),
    }
}

impl fmt::Display for BenchSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>8} {:>10} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10}",
            "nodes", "edges", "ok", "min_s", "q1_s", "median_s", "q3_s", "max_s"
        )?;
        for s in &self.sizes {
            write!(
                f,
                "{:>8} {:>10.0} {:>6}",
                s.m,
                s.mean_edges,
                format!("{}/{}", s.converged, s.runs)
            )?;
            match s.time {
                Some(t) => writeln!(
                    f,
                    " {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                    t.min, t.q1, t.median, t.q3, t.max
                )?,
                None => writeln!(f, " {:>10}", "-")?,
            }
        }
        match &self.regression {
            Some(r) => write!(
                f,
                "log-log slope of time vs edges: {:.3} (95% CI [{:.3}, {:.3}], {} runs)",
                r.slope, r.slope_ci.0, r.slope_ci.1, r.points
            ),
            None => write!(f, "log-log slope: not enough converged runs"),
        }
    }
}
