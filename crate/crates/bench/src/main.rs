use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use lowsync::arnoldi::SkeletonKind;
use lowsync::solver::DiagnosticsLevel;
use lowsync_bench::{emit, run_bench, BenchConfig, RunOptions};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Diagnostics {
    None,
    Cycle,
    Iteration,
}

impl From<Diagnostics> for DiagnosticsLevel {
    fn from(d: Diagnostics) -> Self {
        match d {
            Diagnostics::None => DiagnosticsLevel::None,
            Diagnostics::Cycle => DiagnosticsLevel::Cycle,
            Diagnostics::Iteration => DiagnosticsLevel::Iteration,
        }
    }
}

/// Run block Krylov solver configurations over a set of test problems.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// TOML run configuration.
    #[arg(required_unless_present = "list_skeletons")]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Timed runs per configuration; overrides the configuration.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    repetitions: Option<u64>,
    /// Diagnostics level; overrides the configuration.
    #[arg(long, value_enum)]
    diagnostics: Option<Diagnostics>,
    /// Print the available skeletons and exit.
    #[arg(long)]
    list_skeletons: bool,
    /// Run configurations one at a time instead of in parallel.
    #[arg(long)]
    sequential: bool,
}

fn list_skeletons() {
    for kind in SkeletonKind::ALL {
        println!("{:<10} {}", kind.label(), kind.description());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_skeletons {
        list_skeletons();
        return ExitCode::SUCCESS;
    }
    let path = cli.config.expect("required by clap");
    let cfg = match BenchConfig::load(&path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let mut opts = RunOptions::from_config(&cfg);
    opts.sequential = cli.sequential;
    if let Some(r) = cli.repetitions {
        opts.repetitions = r as usize;
    }
    if let Some(d) = cli.diagnostics {
        opts.diagnostics = d.into();
    }
    let out = cli.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("bench-out"));
    let base = path.parent().map(PathBuf::from).unwrap_or_default();

    let report = run_bench(&cfg, &base, &opts);
    for r in &report.rejected {
        eprintln!("rejected {}: {}", r.label, r.reason);
    }
    for p in &report.problems {
        if let Some(e) = &p.error {
            eprintln!("problem {}: {e}", p.name);
        }
        for f in &p.failures {
            eprintln!("problem {} / {}: {}", p.name, f.label, f.error);
        }
    }
    let rows = match emit(&out, &report) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    for row in &rows {
        println!(
            "{:<16} {:<26} {:>10.4}s {:>6.1}% cycles {:>4} iters {:>5} syncs {:>6} {}",
            row.problem, row.configuration, row.time_s, row.accel_pct, row.cycle_ct, row.iter_ct, row.sync_ct, row.status
        );
    }
    println!("wrote {} rows to {}", rows.len(), out.display());

    let configs = lowsync_bench::runner::classify(&cfg.labels()).0.len();
    let (attempted, done) = report.attempts(configs);
    if attempted > 0 && done == 0 {
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
