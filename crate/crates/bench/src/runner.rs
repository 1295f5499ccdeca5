//! Executes the configuration × problem matrix.

use std::path::Path;
use std::time::Instant;

use lowsync::instrument::{ConvergenceRecord, Counters, RunStats};
use lowsync::kernels::{BlockOperator, DenseMatrix};
use lowsync::problems::{lapl_2d, preconditioned_operator, tridiag, Problem};
use lowsync::solver::{solve_with_reference, true_residual_and_error, DiagnosticsLevel, SolveStatus, SolverConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    parse_configuration, BenchConfig, Configuration, Preconditioner, ProblemSource, ResolvedProblem,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub repetitions: usize,
    pub diagnostics: DiagnosticsLevel,
    pub sequential: bool,
}

impl RunOptions {
    pub fn from_config(cfg: &BenchConfig) -> Self {
        Self { repetitions: cfg.repetitions, diagnostics: cfg.diagnostics, sequential: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Rejected {
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub label: String,
    pub status: SolveStatus,
    pub cycles: usize,
    pub iterations: usize,
    pub counters: Counters,
    pub time_s: f64,
    pub repetitions: usize,
    pub relres_est: f64,
    pub relres_true: f64,
    pub relerr: Option<f64>,
    pub m_history: Vec<usize>,
    #[serde(skip)]
    pub history: Vec<ConvergenceRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunFailure {
    pub label: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemReport {
    pub name: String,
    pub n: Option<usize>,
    pub s: usize,
    pub m: usize,
    pub tol: f64,
    /// Set when the problem could not be prepared; no runs were attempted.
    pub error: Option<String>,
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub seed: u64,
    pub repetitions: usize,
    pub rejected: Vec<Rejected>,
    pub problems: Vec<ProblemReport>,
}

impl BenchReport {
    /// Pairs that were attempted, and pairs that produced a result.
    pub fn attempts(&self, configurations: usize) -> (usize, usize) {
        let attempted = self.problems.len() * configurations;
        let done = self.problems.iter().map(|p| p.runs.len()).sum();
        (attempted, done)
    }
}

/// Splits labels into legal configurations and rejections.
pub fn classify(labels: &[String]) -> (Vec<Configuration>, Vec<Rejected>) {
    let mut ok = Vec::new();
    let mut rejected = Vec::new();
    for label in labels {
        match parse_configuration(label) {
            Ok(c) if !ok.contains(&c) => ok.push(c),
            Ok(_) => {}
            Err(reason) => rejected.push(Rejected { label: label.clone(), reason }),
        }
    }
    (ok, rejected)
}

fn build_problem(p: &ResolvedProblem, seed: u64) -> anyhow::Result<Problem> {
    let problem = match &p.source {
        ProblemSource::Tridiag { n } => tridiag(*n)?,
        ProblemSource::Lapl2d { nx } => lapl_2d(*nx, p.s, seed)?,
        ProblemSource::File { path } => Problem::from_matrix_market(path, p.s, seed)?,
    };
    Ok(match p.preconditioner {
        Preconditioner::None => problem,
        Preconditioner::Ilu0 => problem.with_ilu0()?,
    })
}

fn run_one(
    op: &dyn BlockOperator,
    b: &DenseMatrix,
    x_star: Option<&DenseMatrix>,
    cfg: &SolverConfig,
    repetitions: usize,
) -> Result<RunRecord, String> {
    let mut timings = Vec::with_capacity(repetitions);
    let mut last = None;
    for _ in 0..repetitions {
        let start = Instant::now();
        let r = solve_with_reference(op, b, cfg, x_star).map_err(|e| e.to_string())?;
        timings.push(start.elapsed().as_secs_f64());
        last = Some(r);
    }
    let r = last.expect("at least one repetition");
    let stats = RunStats::from_timings(&timings).expect("at least one repetition");
    let (relres_true, relerr) = true_residual_and_error(op, b, &r.x, x_star);
    Ok(RunRecord {
        label: String::new(),
        status: r.status,
        cycles: r.cycles,
        iterations: r.iterations,
        counters: r.counters,
        time_s: stats.wall_time_s,
        repetitions: stats.repetitions,
        relres_est: r.relres_est,
        relres_true,
        relerr,
        m_history: r.m_history,
        history: r.history,
    })
}

fn run_problem(p: &ResolvedProblem, configs: &[Configuration], seed: u64, opts: &RunOptions) -> ProblemReport {
    let mut report =
        ProblemReport { name: p.name.clone(), n: None, s: p.s, m: p.m, tol: p.tol, error: None, runs: vec![], failures: vec![] };
    let problem = match build_problem(p, seed) {
        Ok(problem) => problem,
        Err(e) => {
            report.error = Some(format!("{e:#}"));
            return report;
        }
    };
    report.n = Some(problem.n());
    let preconditioned;
    let (op, b): (&dyn BlockOperator, DenseMatrix) = match &problem.precond {
        Some(f) => match preconditioned_operator(&problem.a, f) {
            Ok(op) => {
                let b = op.precondition(problem.b.as_view());
                preconditioned = op;
                (&preconditioned, b)
            }
            Err(e) => {
                report.error = Some(e.to_string());
                return report;
            }
        },
        None => (&problem.a, problem.b.clone()),
    };
    let x_star = problem.x_star.as_ref();

    let task = |c: &Configuration| {
        let cfg = SolverConfig::new(c.skeleton, c.paradigm(p.s), c.muscle, p.m, p.tol)
            .with_modification(p.modification)
            .with_stopping(p.stopping)
            .with_max_cycles(p.max_cycles)
            .with_diagnostics(opts.diagnostics);
        let label = c.label();
        run_one(op, &b, x_star, &cfg, opts.repetitions)
            .map(|mut r| {
                r.label = label.clone();
                r
            })
            .map_err(|error| RunFailure { label, error })
    };
    let outcomes: Vec<_> =
        if opts.sequential { configs.iter().map(task).collect() } else { configs.par_iter().map(task).collect() };
    for o in outcomes {
        match o {
            Ok(run) => report.runs.push(run),
            Err(f) => report.failures.push(f),
        }
    }
    report
}

/// Runs every legal configuration on every problem. Problems that cannot
/// be prepared are recorded and skipped.
pub fn run_bench(cfg: &BenchConfig, base_dir: &Path, opts: &RunOptions) -> BenchReport {
    let (configs, rejected) = classify(&cfg.labels());
    let problems = cfg
        .problems
        .iter()
        .map(|spec| match spec.resolve(base_dir) {
            Ok(p) => run_problem(&p, &configs, cfg.seed, opts),
            Err(e) => ProblemReport {
                name: spec.name.clone(),
                n: None,
                s: spec.s.unwrap_or(0),
                m: spec.m.unwrap_or(0),
                tol: spec.tol.unwrap_or(0.0),
                error: Some(format!("{e:#}")),
                runs: vec![],
                failures: vec![],
            },
        })
        .collect();
    BenchReport { seed: cfg.seed, repetitions: opts.repetitions, rejected, problems }
}
