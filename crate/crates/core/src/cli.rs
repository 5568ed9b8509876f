//! Command-line front end: `generate`, `solve`, `verify` and `bench`.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{make_record, run_grid, summarize, write_csv, BenchGrid, CSV_HEADER};
use crate::error::{Error, Result};
use crate::io::{
    generate_load, generate_problem, read_dimacs_mcf, read_matrix_market_edges, read_solution,
    to_dimacs, write_solution, Family, GeneratorSpec, LoadSpec, MtxOptions, SolutionFile,
};
use crate::ipm::{Mode, RegParams};
use crate::oracle::{certificate_violation, solve_mcf_exact};
use crate::ppm::{ps_ipm_solve, PpmParams, SolverOptions};
use crate::problem::Problem;
use crate::report::SolveReport;
use crate::sparsify::{BackendChoice, NormalSolverOptions, SparsifyParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

/// Environment variable holding the bench worker count.
pub const WORKERS_ENV: &str = "SPARSE_OT_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "sparse-ot",
    version,
    about = "Optimal transport on sparse graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random instance in DIMACS min-cost-flow format.
    Generate(GenerateArgs),
    /// Solve an instance.
    Solve(SolveArgs),
    /// Check a solution file against the exact oracle.
    Verify(VerifyArgs),
    /// Time the solver on a grid of generated instances.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub nodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// uniform, pref, kleinberg, smallw or erdrey
    #[arg(long, default_value = "uniform")]
    pub family: Family,
    /// Target mean degree.
    #[arg(long, default_value_t = 5.0)]
    pub density: f64,
    #[arg(long, default_value_t = 1)]
    pub degree_min: usize,
    #[arg(long, default_value_t = 10)]
    pub degree_max: usize,
    /// Fraction of nodes with nonzero load.
    #[arg(long, default_value_t = 0.1)]
    pub load_fraction: f64,
    /// Output path; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// By extension: `.mtx` is Matrix Market, anything else DIMACS.
    Auto,
    Dimacs,
    Mtx,
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub format: InputFormat,
    /// Matrix Market: keep the largest component of a disconnected graph.
    #[arg(long)]
    pub largest_component: bool,
    /// Matrix Market: seed of the generated load.
    #[arg(long, default_value_t = 0)]
    pub load_seed: u64,
    /// Matrix Market: fraction of nodes with nonzero load.
    #[arg(long, default_value_t = 0.1)]
    pub load_fraction: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Primal proximal regularization.
    #[arg(long, default_value = "1e-4")]
    pub rho: f64,
    /// Dual proximal regularization.
    #[arg(long, default_value = "1e-6")]
    pub delta: f64,
    /// Sparsification constant: weights below ct*mu/(1+rho*mu) are dropped.
    #[arg(long, default_value = "0.4")]
    pub ct: f64,
    /// Keep every edge in the normal matrix.
    #[arg(long)]
    pub no_sparsify: bool,
    /// auto, full-cholesky, sparsified-cholesky or sparsified-pcg
    #[arg(long, default_value = "auto")]
    pub backend: BackendChoice,
    /// practical or theory
    #[arg(long, default_value = "practical")]
    pub mode: Mode,
    /// Global stopping tolerance.
    #[arg(long, default_value = "1e-10")]
    pub tol: f64,
    /// Drop tolerance of the incomplete Cholesky preconditioner.
    #[arg(long, default_value = "1e-3")]
    pub ichol_droptol: f64,
    /// Apply the drop rule to the unscaled normal matrix.
    #[arg(long)]
    pub unscaled_ichol: bool,
    /// PCG relative tolerance as a multiple of mu.
    #[arg(long, default_value = "0.1")]
    pub pcg_tol_factor: f64,
    /// Decay rate of the proximal inexactness threshold.
    #[arg(long, default_value = "0.7")]
    pub sigma_r: f64,
    /// Relaxation of the proximal inexactness threshold.
    #[arg(long, default_value = "1e-4")]
    pub tau1: f64,
    /// Use the unrelaxed inexactness threshold (tau1 = 1).
    #[arg(long)]
    pub strict_ppm: bool,
    #[arg(long, default_value_t = 200)]
    pub max_outer: usize,
    /// Inner iteration cap per subproblem; mode default when omitted.
    #[arg(long)]
    pub max_inner: Option<usize>,
}

impl SolverArgs {
    pub fn options(&self) -> Result<SolverOptions> {
        let mut ppm = PpmParams::new(self.sigma_r, self.tau1, self.tol, self.max_outer)?;
        if self.strict_ppm {
            ppm = ppm.strict();
        }
        if !(self.ichol_droptol >= 0.0 && self.pcg_tol_factor > 0.0) {
            return Err(Error::Param(
                "need ichol-droptol >= 0 and pcg-tol-factor > 0".into(),
            ));
        }
        Ok(SolverOptions {
            reg: RegParams::new(self.rho, self.delta)?,
            mode: self.mode,
            normal: NormalSolverOptions {
                backend: self.backend,
                sparsify: SparsifyParams::new(self.ct, !self.no_sparsify)?,
                ichol_drop_tol: self.ichol_droptol,
                ichol_scaled: !self.unscaled_ichol,
                pcg_tol_factor: self.pcg_tol_factor,
                pcg_max_iterations: None,
            },
            ppm,
            max_inner_iterations: self.max_inner,
            ..SolverOptions::default()
        })
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InstanceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write flows and potentials here.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    /// Append a CSV record here (header written to a new file).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: InstanceArgs,
    pub solution: PathBuf,
    /// Largest accepted relative objective gap and infeasibility.
    #[arg(long, default_value = "1e-6")]
    pub threshold: f64,
    /// Above this many edges only the optimality certificate is checked.
    #[arg(long, default_value_t = 1_000_000)]
    pub oracle_max_edges: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Node counts.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1000,3000,10000,30000,100000"
    )]
    pub sizes: Vec<usize>,
    /// Instances per size.
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub load_fraction: f64,
    /// Also run the exact oracle and record its objective.
    #[arg(long)]
    pub oracle: bool,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<i32> {
    let spec = GeneratorSpec {
        node_count: a.nodes,
        degree_min: a.degree_min,
        degree_max: a.degree_max,
        degree_avg: a.density,
        seed: a.seed,
        family: a.family,
    };
    let prob = generate_problem(&spec, a.load_fraction)?;
    let text = to_dimacs(&prob);
    match &a.output {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    eprintln!(
        "seed {} ({} nodes, {} arcs, family {})",
        a.seed,
        prob.node_count(),
        prob.edge_count(),
        a.family
    );
    Ok(EXIT_OK)
}

pub fn load_instance(a: &InstanceArgs) -> Result<Problem> {
    let is_mtx = match a.format {
        InputFormat::Mtx => true,
        InputFormat::Dimacs => false,
        InputFormat::Auto => a.instance.extension().is_some_and(|e| e == "mtx"),
    };
    if !is_mtx {
        return read_dimacs_mcf(&a.instance);
    }
    let opts = MtxOptions {
        largest_component: a.largest_component,
        weighted: false,
    };
    let g = read_matrix_market_edges(&a.instance, opts)?.graph;
    let load = generate_load(
        g.node_count(),
        &LoadSpec {
            nonzero_fraction: a.load_fraction,
            seed: a.load_seed,
        },
    )?;
    Problem::new(g, load)
}

fn instance_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into())
}

fn dump_trace(report: &SolveReport) {
    eprintln!("outer    natural   threshold  inner exit");
    for o in &report.outer {
        eprintln!(
            "{:>5} {:>10.3e} {:>10.3e} {:>6} {:?}",
            o.k, o.natural_residual, o.threshold, o.inner_iterations, o.exit
        );
    }
    let tail = report.iterations.len().saturating_sub(20);
    eprintln!("last inner iterations:");
    eprintln!("outer inner         mu     primal       dual      alpha   backend");
    for r in &report.iterations[tail..] {
        eprintln!(
            "{:>5} {:>5} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e}   {}",
            r.outer, r.inner, r.mu, r.primal_residual, r.dual_residual, r.alpha, r.backend
        );
    }
}

pub fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let prob = load_instance(&a.input)?;
    let opts = a.solver.options()?;
    let id = instance_id(&a.input.instance);
    let sol = match ps_ipm_solve(&prob, &opts) {
        Ok(s) => s,
        Err(Error::NonConvergence {
            iterations,
            reason,
            report,
        }) => {
            eprintln!("not converged after {iterations} iterations: {reason}");
            if let Some(r) = report {
                dump_trace(&r);
            }
            return Ok(EXIT_NOT_CONVERGED);
        }
        Err(e @ Error::Stall { .. }) | Err(e @ Error::Numerical(_)) => {
            eprintln!("solver failed: {e}");
            return Ok(EXIT_NOT_CONVERGED);
        }
        Err(e) => return Err(e),
    };
    let r = &sol.report;
    println!("status      {:?}", r.status);
    println!("objective   {}", sol.objective);
    if prob.mass() > 0.0 {
        println!("unit-mass   {}", sol.objective / prob.mass());
    }
    println!(
        "iterations  outer {}  ipm {}  pcg {}",
        r.outer_iterations(),
        r.ipm_iterations(),
        r.pcg_iterations()
    );
    println!("time        {:.6} s", r.time.as_secs_f64());
    if let Some(path) = &a.solution {
        write_solution(
            &SolutionFile {
                objective: sol.objective,
                flow: sol.x.clone(),
                potential: sol.y.clone(),
            },
            path,
        )?;
    }
    if let Some(path) = &a.csv {
        let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            writeln!(f, "{CSV_HEADER}")?;
        }
        let rec = make_record(
            &id,
            &prob,
            &opts,
            Some(r),
            sol.objective,
            r.time.as_secs_f64(),
            None,
        );
        writeln!(f, "{}", rec.csv_row())?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let prob = load_instance(&a.input)?;
    let sol = match read_solution(&a.solution, prob.edge_count(), prob.node_count()) {
        Ok(s) => s,
        Err(Error::Io(e)) => return Err(Error::Io(e)),
        Err(e) => {
            eprintln!("unreadable solution: {e}");
            return Ok(EXIT_VERIFY_FAILED);
        }
    };
    let tol = a.threshold;
    let scale = prob.scale();
    let objective = prob.objective(&sol.flow);
    let mut ok = true;
    let mut ax = vec![0.0; prob.node_count()];
    prob.graph().incidence_matvec_into(&sol.flow, &mut ax);
    let infeasibility: f64 = ax.iter().zip(prob.load()).map(|(a, b)| (a - b).abs()).sum();
    let negative = sol.flow.iter().fold(0.0f64, |m, x| m.max(-x));
    println!("primal infeasibility {:.3e}", infeasibility / scale);
    if infeasibility > tol * scale || negative > tol * scale {
        println!("flow is infeasible");
        ok = false;
    }
    if (sol.objective - objective).abs() > tol * objective.abs().max(1.0) {
        println!(
            "stated objective {} differs from c^T x = {objective}",
            sol.objective
        );
        ok = false;
    }
    if prob.edge_count() <= a.oracle_max_edges {
        let exact = solve_mcf_exact(&prob)?;
        let gap = (objective - exact.objective).abs() / exact.objective.abs().max(1.0);
        println!("oracle objective {}", exact.objective);
        println!("relative objective gap {gap:.3e}");
        ok &= gap <= tol;
    } else {
        let v = certificate_violation(&prob, &sol.flow, &sol.potential);
        println!(
            "certificate violation {v:.3e} (oracle skipped above {} edges)",
            a.oracle_max_edges
        );
        ok &= v <= tol;
    }
    println!("{}", if ok { "verified" } else { "FAILED" });
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn configured_workers() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let opts = a.solver.options()?;
    if a.sizes.is_empty() || a.reps == 0 {
        return Err(Error::Param(
            "need at least one size and one repetition".into(),
        ));
    }
    let grid = BenchGrid {
        sizes: a.sizes.clone(),
        repetitions: a.reps,
        seed: a.seed,
        load_fraction: a.load_fraction,
        with_oracle: a.oracle,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = configured_workers() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Param(format!("cannot start worker pool: {e}")))?;
    let records = pool.install(|| run_grid(&grid, &opts))?;
    match &a.csv {
        Some(p) => write_csv(&mut fs::File::create(p)?, &records)?,
        None => write_csv(&mut std::io::stdout().lock(), &records)?,
    }
    eprintln!("{}", summarize(&records));
    Ok(EXIT_OK)
}
