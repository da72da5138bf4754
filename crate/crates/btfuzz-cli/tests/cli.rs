//! End-to-end tests of the `btfuzz` binary: exit codes, artifact layout,
//! determinism of outputs, and the printed summaries.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_btfuzz"))
}

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn example1() -> PathBuf {
    scenarios_dir().join("example1.json")
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn btfuzz")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        stdout(out),
        stderr(out)
    );
}

// --- validate ---------------------------------------------------------------

#[test]
fn validate_accepts_the_shipped_scenario_and_echoes_a_stable_canonical_form() {
    let tmp = TempDir::new().unwrap();
    let canon1 = tmp.path().join("canon1.json");
    let out = run(bin().args(["validate", "--scenario"]).arg(example1()).arg("--out").arg(&canon1));
    assert_code(&out, 0);
    assert!(stdout(&out).contains("ok: logical scenario"));
    assert!(stdout(&out).contains("4 free dimensions"));

    // Validating the canonical form reproduces it byte-for-byte.
    let canon2 = tmp.path().join("canon2.json");
    let out = run(bin().args(["validate", "--scenario"]).arg(&canon1).arg("--out").arg(&canon2));
    assert_code(&out, 0);
    assert_eq!(fs::read(&canon1).unwrap(), fs::read(&canon2).unwrap());
}

#[test]
fn validate_rejects_malformed_json_with_exit_2() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let out = run(bin().args(["validate", "--scenario"]).arg(&bad));
    assert_code(&out, 2);
    assert!(stderr(&out).contains("neither scenario kind"));
}

#[test]
fn validate_reports_structural_diagnostics_with_exit_2() {
    let tmp = TempDir::new().unwrap();
    let mut doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(example1()).unwrap()).unwrap();
    doc["ego"]["lane"] = serde_json::json!("no_such_lane");
    let broken = tmp.path().join("broken.json");
    fs::write(&broken, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(bin().args(["validate", "--scenario"]).arg(&broken));
    assert_code(&out, 2);
    assert!(stderr(&out).contains("no_such_lane"));
}

// --- fuzz -------------------------------------------------------------------

#[test]
fn fuzz_is_deterministic_across_runs_workers_and_log_verbosity() {
    let tmp = TempDir::new().unwrap();
    let mut ledgers = Vec::new();
    for (name, workers, verbosity) in
        [("a", "1", None), ("b", "1", Some("debug")), ("c", "8", None)]
    {
        let path = tmp.path().join(format!("{name}.ndjson"));
        let mut cmd = bin();
        cmd.args(["fuzz", "--scenario"])
            .arg(example1())
            .args(["--budget", "30", "--algorithm", "grid", "--seed", "7"])
            .args(["--workers", workers])
            .arg("--out")
            .arg(&path);
        if let Some(v) = verbosity {
            cmd.env("BTF_LOG", v);
        }
        let out = run(&mut cmd);
        assert_code(&out, 0);
        ledgers.push(fs::read(&path).unwrap());
    }
    assert_eq!(ledgers[0], ledgers[1], "verbosity changed the ledger");
    assert_eq!(ledgers[0], ledgers[2], "worker count changed the ledger");
}

#[test]
fn fuzz_honors_the_budget_and_prints_metrics() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("ledger.ndjson");
    let out = run(bin()
        .args(["fuzz", "--scenario"])
        .arg(example1())
        .args(["--budget", "25", "--algorithm", "grid", "--seed", "0"])
        .arg("--out")
        .arg(&path));
    assert_code(&out, 0);
    let text = fs::read_to_string(&path).unwrap();
    let points = text.lines().filter(|l| l.contains("\"point\"")).count();
    assert_eq!(points, 25);
    assert!(stdout(&out).contains("critical"));
    assert!(stdout(&out).contains("CR "));
}

#[test]
fn fuzz_rejects_scenarios_without_variables_with_exit_4() {
    let tmp = TempDir::new().unwrap();
    let mut doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(example1()).unwrap()).unwrap();
    doc["variables"] = serde_json::json!([]);
    let fixed = tmp.path().join("no_vars.json");
    fs::write(&fixed, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(bin().args(["fuzz", "--scenario"]).arg(&fixed));
    assert_code(&out, 4);
    assert!(stderr(&out).contains("no free variables"));
}

#[test]
fn fuzz_rejects_a_missing_scenario_with_exit_2() {
    let out = run(bin().args(["fuzz", "--scenario", "/nonexistent/scenario.json"]));
    assert_code(&out, 2);
}

// --- replay -----------------------------------------------------------------

#[test]
fn replay_writes_trace_and_events_and_prints_the_score_breakdown() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("replay");
    let out = run(bin()
        .args(["replay", "--scenario"])
        .arg(example1())
        .args(["--values", "11.5,35,24,4"])
        .arg("--out")
        .arg(&out_dir));
    assert_code(&out, 0);
    let text = stdout(&out);
    assert!(text.contains("verdict:"));
    assert!(text.contains("branch: weighted difference"));
    assert!(out_dir.join("trace.csv").exists());
    assert!(out_dir.join("events.json").exists());

    let events: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("events.json")).unwrap()).unwrap();
    assert!(events["events"]["termination"].is_string());
    assert!(events["evaluation"]["fitness"].is_number());

    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("time,agent,lane,s,"));
}

#[test]
fn replay_flags_a_dimension_mismatch_with_exit_5() {
    let out = run(bin()
        .args(["replay", "--scenario"])
        .arg(example1())
        .args(["--values", "11.5,35"]));
    assert_code(&out, 5);
    assert!(stderr(&out).contains("2 values given but scenario has 4"));
}

#[test]
fn replay_reproduces_a_ledger_record_exactly() {
    let tmp = TempDir::new().unwrap();
    let ledger = tmp.path().join("ledger.ndjson");
    let out = run(bin()
        .args(["fuzz", "--scenario"])
        .arg(example1())
        .args(["--budget", "12", "--algorithm", "grid", "--seed", "3"])
        .arg("--out")
        .arg(&ledger));
    assert_code(&out, 0);

    // Stored outcome of record 5, straight from the ledger.
    let text = fs::read_to_string(&ledger).unwrap();
    let record: serde_json::Value = text
        .lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .find(|v| v["type"] == "point" && v["index"] == serde_json::json!(5))
        .expect("record 5 in ledger");

    let out_dir = tmp.path().join("replay");
    let out = run(bin()
        .args(["replay", "--scenario"])
        .arg(example1())
        .arg("--ledger")
        .arg(&ledger)
        .args(["--index", "5"])
        .arg("--out")
        .arg(&out_dir));
    assert_code(&out, 0);

    let events: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("events.json")).unwrap()).unwrap();
    assert_eq!(events["evaluation"]["fitness"], record["fitness"]);
    assert_eq!(events["evaluation"]["verdict"], record["verdict"]);
}

// --- report -----------------------------------------------------------------

fn fuzz_ledger(tmp: &Path, budget: &str) -> PathBuf {
    let ledger = tmp.join("ledger.ndjson");
    let out = run(bin()
        .args(["fuzz", "--scenario"])
        .arg(example1())
        .args(["--budget", budget, "--algorithm", "grid", "--seed", "1"])
        .arg("--out")
        .arg(&ledger));
    assert_code(&out, 0);
    ledger
}

#[test]
fn report_renders_tables_and_charts_idempotently() {
    let tmp = TempDir::new().unwrap();
    // Budget 150 covers enough of the lattice to contain critical points.
    let ledger = fuzz_ledger(tmp.path(), "150");

    let report_dir = tmp.path().join("report");
    let out = run(bin().args(["report", "--ledger"]).arg(&ledger).arg("--out").arg(&report_dir));
    assert_code(&out, 0);
    for f in ["metrics.csv", "variables.png", "progress.png"] {
        assert!(report_dir.join(f).exists(), "missing {f}");
    }
    let text = stdout(&out);
    assert!(text.contains("critical"));

    let metrics1 = fs::read(report_dir.join("metrics.csv")).unwrap();
    let variables1 = fs::read(report_dir.join("variables.png")).unwrap();
    let out = run(bin().args(["report", "--ledger"]).arg(&ledger).arg("--out").arg(&report_dir));
    assert_code(&out, 0);
    assert_eq!(fs::read(report_dir.join("metrics.csv")).unwrap(), metrics1);
    assert_eq!(fs::read(report_dir.join("variables.png")).unwrap(), variables1);
}

#[test]
fn report_forced_cluster_count_overrides_selection() {
    let tmp = TempDir::new().unwrap();
    let ledger = fuzz_ledger(tmp.path(), "150");
    let report_dir = tmp.path().join("report");
    let out = run(bin()
        .args(["report", "--ledger"])
        .arg(&ledger)
        .args(["--k", "2"])
        .arg("--out")
        .arg(&report_dir));
    assert_code(&out, 0);
    let text = stdout(&out);
    assert!(text.contains("type 0:"));
    assert!(text.contains("type 1:"));
    assert!(!text.contains("type 2:"));
}

#[test]
fn report_rejects_an_unparseable_ledger_with_exit_2() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.ndjson");
    fs::write(&bad, "{\"kind\":\"wat\"}\n").unwrap();
    let out = run(bin().args(["report", "--ledger"]).arg(&bad));
    assert_code(&out, 2);
}

// --- log2bt -----------------------------------------------------------------

/// Constant-speed straight-lane log: 12 s at 10 Hz, 15 m/s along l0.
fn write_constant_log(path: &Path) {
    let mut csv = String::from("t,x,y\n");
    for k in 0..=120 {
        let t = k as f64 * 0.1;
        csv.push_str(&format!("{:.1},{:.3},0.0\n", t, 15.0 * t + 5.0));
    }
    fs::write(path, csv).unwrap();
}

#[test]
fn log2bt_abstracts_a_cruise_log_and_reports_fidelity() {
    let tmp = TempDir::new().unwrap();
    let log = tmp.path().join("cruise.csv");
    write_constant_log(&log);
    let out_file = tmp.path().join("abstraction.json");
    let out = run(bin()
        .args(["log2bt", "--log"])
        .arg(&log)
        .arg("--map")
        .arg(scenarios_dir().join("map_two_lane.json"))
        .args(["--lane", "l0"])
        .arg("--out")
        .arg(&out_file));
    assert_code(&out, 0);
    let text = stdout(&out);
    assert!(text.contains("ADE_s"), "missing fidelity line: {text}");
    assert!(text.contains("compression"));
    let doc = fs::read_to_string(&out_file).unwrap();
    assert!(doc.contains("cruise"), "expected a cruise leaf: {doc}");
}

#[test]
fn log2bt_follow_log_mode_emits_no_semantic_leaves() {
    let tmp = TempDir::new().unwrap();
    let log = tmp.path().join("cruise.csv");
    write_constant_log(&log);
    let out_file = tmp.path().join("tree.json");
    let out = run(bin()
        .args(["log2bt", "--log"])
        .arg(&log)
        .arg("--map")
        .arg(scenarios_dir().join("map_two_lane.json"))
        .args(["--lane", "l0", "--semantic", "false"])
        .arg("--out")
        .arg(&out_file));
    assert_code(&out, 0);
    let doc = fs::read_to_string(&out_file).unwrap();
    assert!(doc.contains("follow_log"), "expected follow-log leaves: {doc}");
    assert!(!doc.contains("\"cruise\""), "semantic leaf in log mode: {doc}");
}

#[test]
fn log2bt_missing_input_exits_2_without_partial_output() {
    let tmp = TempDir::new().unwrap();
    let out_file = tmp.path().join("abstraction.json");
    let out = run(bin()
        .args(["log2bt", "--log", "/nonexistent/log.csv", "--map"])
        .arg(scenarios_dir().join("map_two_lane.json"))
        .args(["--lane", "l0"])
        .arg("--out")
        .arg(&out_file));
    assert_code(&out, 2);
    assert!(!out_file.exists());
}

#[test]
fn log2bt_several_logs_require_a_template() {
    let tmp = TempDir::new().unwrap();
    let log1 = tmp.path().join("a.csv");
    let log2 = tmp.path().join("b.csv");
    write_constant_log(&log1);
    write_constant_log(&log2);
    let out = run(bin()
        .args(["log2bt", "--log"])
        .arg(&log1)
        .arg("--log")
        .arg(&log2)
        .arg("--map")
        .arg(scenarios_dir().join("map_two_lane.json"))
        .args(["--lane", "l0"])
        .arg("--out")
        .arg(tmp.path().join("x.json")));
    assert_code(&out, 2);
    assert!(stderr(&out).contains("--template"));
}
