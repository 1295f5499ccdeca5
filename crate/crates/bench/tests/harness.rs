use std::fs;
use std::path::Path;
use std::process::Command;

use lowsync::kernels::CsrMatrix;
use lowsync::problems::write_matrix_market;
use lowsync::solver::DiagnosticsLevel;
use lowsync_bench::output::{history_path, write_results};
use lowsync_bench::{emit, read_results, run_bench, BenchConfig, RunOptions};

const BIN: &str = env!("CARGO_BIN_EXE_lowsync-bench");

fn opts() -> RunOptions {
    RunOptions { repetitions: 1, diagnostics: DiagnosticsLevel::None, sequential: true }
}

fn small_config(extra: &str) -> BenchConfig {
    BenchConfig::parse(&format!(
        r#"
configurations = ["cl-bmgs", "cl-bcgs-pip", "gl-bmgs-cwy", "gl-bcgs-irols"]
{extra}

[[problems]]
name = "tridiag"
n = 200
m = 20
tol = 1e-8
"#
    ))
    .unwrap()
}

#[test]
fn results_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_bench(&small_config(""), Path::new("."), &opts());
    let rows = emit(dir.path(), &report).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(read_results(&dir.path().join("results.csv")).unwrap(), rows);
}

#[test]
fn slowest_run_has_zero_acceleration() {
    let report = run_bench(&small_config(""), Path::new("."), &opts());
    let rows = lowsync_bench::result_rows(&report);
    assert_eq!(rows[0].accel_pct, 0.0);
    assert!(rows.windows(2).all(|w| w[0].time_s >= w[1].time_s));
    assert!(rows.iter().all(|r| (0.0..100.0).contains(&r.accel_pct)));
}

#[test]
fn counts_are_deterministic() {
    let strip = |cfg: &BenchConfig| {
        let mut rows = lowsync_bench::result_rows(&run_bench(cfg, Path::new("."), &opts()));
        rows.sort_by(|a, b| a.configuration.cmp(&b.configuration));
        rows.into_iter().map(|r| (r.configuration, r.cycle_ct, r.iter_ct, r.a_ct, r.v_ct, r.sync_ct)).collect::<Vec<_>>()
    };
    let cfg = small_config("");
    assert_eq!(strip(&cfg), strip(&cfg));
    let par = RunOptions { sequential: false, ..opts() };
    let a = lowsync_bench::result_rows(&run_bench(&cfg, Path::new("."), &par));
    let b = lowsync_bench::result_rows(&run_bench(&cfg, Path::new("."), &opts()));
    assert_eq!(a.len(), b.len());
}

#[test]
fn missing_file_is_recorded_and_run_continues() {
    let mut cfg = small_config("");
    cfg.problems.insert(
        0,
        lowsync_bench::ProblemSpec { name: "absent".into(), path: Some("does/not/exist.mtx".into()), ..Default::default() },
    );
    let report = run_bench(&cfg, Path::new("."), &opts());
    assert!(report.problems[0].error.is_some());
    assert!(report.problems[0].runs.is_empty());
    assert_eq!(report.problems[1].runs.len(), 4);
}

#[test]
fn illegal_labels_are_rejected_with_reasons() {
    let cfg = small_config("").clone();
    let mut cfg = cfg;
    cfg.configurations.extend(["cl-bmgs-svl:cholqr".to_string(), "xx-bmgs".to_string(), "gl-bmgs:cholqr".to_string()]);
    let report = run_bench(&cfg, Path::new("."), &opts());
    assert_eq!(report.rejected.len(), 3);
    assert!(report.rejected.iter().all(|r| !r.reason.is_empty()));
    assert_eq!(report.problems[0].runs.len(), 4);
}

#[test]
fn history_iterations_increase() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config("");
    let o = RunOptions { diagnostics: DiagnosticsLevel::Iteration, ..opts() };
    let report = run_bench(&cfg, Path::new("."), &o);
    emit(dir.path(), &report).unwrap();
    for run in &report.problems[0].runs {
        let path = history_path(dir.path(), &run.label, "tridiag");
        let mut r = csv::Reader::from_path(&path).unwrap();
        let rows: Vec<lowsync_bench::output::HistoryRow> = r.deserialize().map(Result::unwrap).collect();
        assert!(!rows.is_empty(), "{}", run.label);
        assert!(rows.windows(2).all(|w| w[0].iter < w[1].iter), "{}", run.label);
        assert!(rows.iter().all(|h| h.kappa.is_some()), "{}", run.label);
    }
}

#[test]
fn matrix_market_problem_with_ilu0() {
    let dir = tempfile::tempdir().unwrap();
    let n = 60;
    let mut trip = Vec::new();
    for i in 0..n {
        trip.push((i, i, 4.0));
        if i + 1 < n {
            trip.push((i, i + 1, -1.0));
            trip.push((i + 1, i, -1.5));
        }
    }
    write_matrix_market(&dir.path().join("a.mtx"), &CsrMatrix::from_triplets(n, &trip).unwrap()).unwrap();
    let cfg = BenchConfig::parse(
        r#"
configurations = ["cl-bmgs", "gl-bmgs-icwy"]
[[problems]]
name = "file"
path = "a.mtx"
s = 3
m = 10
preconditioner = "ilu0"
stopping = "error"
"#,
    )
    .unwrap();
    let report = run_bench(&cfg, dir.path(), &opts());
    let p = &report.problems[0];
    assert_eq!(p.error, None);
    assert_eq!(p.runs.len(), 2);
    assert!(p.runs.iter().all(|r| r.relerr.is_some_and(|e| e <= 1e-5)));
}

#[test]
fn empty_results_file_has_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    write_results(&path, &[]).unwrap();
    assert!(fs::read_to_string(&path).unwrap().starts_with("problem,configuration"));
    assert!(read_results(&path).unwrap().is_empty());
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn cli_empty_configuration_list_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.toml", "[[problems]]\nname = \"tridiag\"\nn = 50\n");
    let out = dir.path().join("out");
    let status = Command::new(BIN).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(read_results(&out.join("results.csv")).unwrap().is_empty());
    assert!(out.join("summary.json").exists());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = Command::new(BIN).arg(dir.path().join("nope.toml")).status().unwrap();
    assert_eq!(missing.code(), Some(1));

    let bad = write(dir.path(), "bad.toml", "repetitions = 0\n");
    assert_eq!(Command::new(BIN).arg(&bad).status().unwrap().code(), Some(1));

    let none = write(
        dir.path(),
        "none.toml",
        "configurations = [\"cl-bmgs\"]\n[[problems]]\nname = \"x\"\npath = \"absent.mtx\"\n",
    );
    let out = dir.path().join("out2");
    assert_eq!(Command::new(BIN).arg(&none).arg("--out").arg(&out).status().unwrap().code(), Some(2));

    let ok = write(
        dir.path(),
        "ok.toml",
        "configurations = [\"cl-bmgs\"]\n[[problems]]\nname = \"tridiag\"\nn = 100\nm = 10\ntol = 1e-6\n",
    );
    let out = dir.path().join("out3");
    let run = Command::new(BIN).arg(&ok).args(["--repetitions", "2"]).arg("--out").arg(&out).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["repetitions"], 2);
    assert_eq!(summary["problems"][0]["runs"][0]["label"], "cl-bmgs:cholqr");
}

#[test]
fn cli_lists_skeletons() {
    let out = Command::new(BIN).arg("--list-skeletons").output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 8);
}
