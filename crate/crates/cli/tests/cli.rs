use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use bemas_bench::{default_cases, golden_scripts, write_cases};
use bemas_llm::{BackendSpec, Matcher, Pricing, Rule};
use bemas_orchestrator::{Mode, SessionTrace};
use serde_json::{json, Value};

fn bemas() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bemas"));
    c.env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bemas().args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const GREETING: &str = "Hi there, who are you?";

/// Registry with a planner and a specialist replaying the case study, plus
/// a greeting rule.
fn scripted_backends(dir: &Path) -> PathBuf {
    let case = default_cases().into_iter().find(|c| c.test_id == "MAMT_001").unwrap();
    let mut scripts = golden_scripts(&case, Mode::C2, None);
    let hello = Rule::text(
        Matcher { regex: Some(r"\A# Concierge".into()), substring: Some(GREETING.into()), call_index: None },
        "Hello! I can configure, simulate and compare building energy systems.",
    );
    scripts.planner.rules.insert(0, hello);
    std::fs::write(dir.join("planner.json"), serde_json::to_string(&scripts.planner).unwrap()).unwrap();
    std::fs::write(dir.join("specialist.json"), serde_json::to_string(&scripts.specialist).unwrap()).unwrap();
    let mut planner = BackendSpec::scripted("planner", Pricing::new(0.15, 0.6));
    planner.script_path = Some("planner.json".into());
    let mut spec = BackendSpec::scripted("specialist", Pricing::FREE);
    spec.script_path = Some("specialist.json".into());
    let path = dir.join("backends.json");
    std::fs::write(&path, serde_json::to_string(&[planner, spec]).unwrap()).unwrap();
    path
}

fn case_study_request() -> String {
    default_cases().into_iter().find(|c| c.test_id == "MAMT_001").unwrap().request
}

#[test]
fn help_is_success_and_bad_flags_are_usage_errors() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--bogus", "chat"]).status.code(), Some(1));
    let out = run(&["--mode", "c3", "chat"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("c3"));
    assert_eq!(run(&[]).status.code(), Some(1));
}

#[test]
fn serve_tcp_reports_tool_count_and_refuses_a_taken_port() {
    let mut child =
        bemas().args(["serve", "--transport", "tcp", "--port", "0"]).stdout(Stdio::piped()).spawn().unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let (head, addr) = line.trim().split_once(" on tcp://").unwrap();
    let n: usize = head.strip_prefix("serving ").unwrap().strip_suffix(" tools").unwrap().parse().unwrap();
    assert!(n >= 60, "{line}");

    let client = bemas_toolbus::transport::RemoteClient::connect_tcp(addr).unwrap();
    use bemas_toolbus::ToolClient;
    assert_eq!(client.list_tools(bemas_toolbus::ListDetail::NamesOnly).unwrap().len(), n);

    let port = addr.rsplit_once(':').unwrap().1;
    let second = run(&["serve", "--port", port]);
    assert_eq!(second.status.code(), Some(2));
    assert!(text(&second.stderr).contains("PortInUse"), "{}", text(&second.stderr));
    child.kill().unwrap();
    child.wait().unwrap();
}

#[test]
fn serve_stdio_answers_frames_and_survives_garbage() {
    let mut child = bemas()
        .args(["serve", "--transport", "stdio"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    writeln!(stdin, "not json").unwrap();
    writeln!(stdin, r#"{{"jsonrpc":"2.0","id":1,"method":"tools/list","params":{{}}}}"#).unwrap();
    drop(stdin);
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<Value> = text(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0]["error"].is_object());
    assert_eq!(lines[1]["id"], json!(1));
    assert!(lines[1]["result"].is_object() || lines[1]["result"].is_array(), "{}", lines[1]);
    assert!(text(&out.stderr).contains("serving 61 tools"));
}

#[test]
fn bench_toy_matrix_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cases = dir.path().join("cases.jsonl");
    std::fs::write(&cases, write_cases(&default_cases()[..2])).unwrap();
    let results = dir.path().join("out");
    let out = run(&[
        "bench",
        "--cases",
        p(&cases),
        "--modes",
        "c1,c2,d",
        "--pairs",
        "API-S",
        "--golden",
        "--results-dir",
        p(&results),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let records = std::fs::read_to_string(results.join("records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 6);
    let summary = std::fs::read_to_string(results.join("summary.csv")).unwrap();
    let mode_rows: Vec<&str> = summary.lines().filter(|l| l.contains(",mode,")).collect();
    assert_eq!(mode_rows.len(), 3);
    let snapshot = std::fs::read_to_string(results.join("config.toml")).unwrap();
    assert!(snapshot.contains("golden = true"), "{snapshot}");
    assert!(std::fs::read_dir(results.join("runs")).unwrap().count() == 6);
}

#[test]
fn malformed_case_line_is_reported_with_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let mut lines: Vec<String> = write_cases(&default_cases()[..4]).lines().map(String::from).collect();
    lines[2] = "{ not a case".into();
    let cases = dir.path().join("cases.jsonl");
    std::fs::write(&cases, lines.join("\n")).unwrap();
    let out = run(&["bench", "--cases", p(&cases), "--golden", "--results-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("BadCaseFile:3"), "{}", text(&out.stderr));
}

#[test]
fn crashed_runs_give_harness_fault_exit() {
    let dir = tempfile::tempdir().unwrap();
    // the registry has no backend for tier L
    let backends = dir.path().join("b.json");
    std::fs::write(&backends, "[]").unwrap();
    let cases = dir.path().join("cases.jsonl");
    std::fs::write(&cases, write_cases(&default_cases()[..1])).unwrap();
    let out = run(&[
        "bench",
        "--cases",
        p(&cases),
        "--modes",
        "c1",
        "--pairs",
        "L-S",
        "--backends",
        p(&backends),
        "--results-dir",
        p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
    assert_eq!(std::fs::read_to_string(dir.path().join("records.jsonl")).unwrap().lines().count(), 1);
}

#[test]
fn report_prints_every_metric_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cases = dir.path().join("cases.jsonl");
    std::fs::write(&cases, write_cases(&default_cases()[..3])).unwrap();
    let out = run(&["bench", "--cases", p(&cases), "--pairs", "S-S,API-M", "--golden", "--results-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let csv = dir.path().join("by_pair.csv");
    let out = run(&[
        "report",
        "--records",
        p(&dir.path().join("records.jsonl")),
        "--group-by",
        "mode",
        "--group-by",
        "tier_pair",
        "--csv",
        p(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    for name in [
        "Tool selection accuracy",
        "Agent selection accuracy",
        "Plan step accuracy",
        "Parameter accuracy (key)",
        "Parameter accuracy (value)",
        "Orchestrator tokens",
        "Agent tokens",
        "Total cost",
        "Planning time",
    ] {
        assert!(stdout.contains(name), "{name}");
    }
    assert!(stdout.contains("== by mode ==") && stdout.contains("API-M"));
    let written = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(written.lines().count(), 1 + 3 + 2);

    assert_eq!(run(&["report", "--records", p(&dir.path().join("missing.jsonl"))]).status.code(), Some(1));
    let bad = run(&["report", "--records", p(&dir.path().join("records.jsonl")), "--group-by", "weather"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn chat_greets_then_answers_the_case_study() {
    let dir = tempfile::tempdir().unwrap();
    let backends = scripted_backends(dir.path());
    let results = dir.path().join("results");
    let mut child = bemas()
        .args([
            "--backends",
            p(&backends),
            "--orchestrator-backend",
            "planner",
            "--specialist-backend",
            "specialist",
            "--mode",
            "c2",
            "--results-dir",
            p(&results),
            "--trace",
            "chat",
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    writeln!(stdin, "{GREETING}").unwrap();
    writeln!(stdin, "{}", case_study_request()).unwrap();
    drop(stdin);
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("Hello!"), "{stdout}");
    for facet in ["energy.", "cost.", "comfort.", "flexibility."] {
        assert!(stdout.contains(facet), "{facet}");
    }
    let stderr = text(&out.stderr);
    let traces: Vec<SessionTrace> = stderr
        .lines()
        .filter_map(|l| l.strip_prefix("trace: "))
        .map(|path| SessionTrace::load(Path::new(path)).unwrap())
        .collect();
    assert_eq!(traces.len(), 2);
    assert!(!traces[0].routed && traces[0].steps.is_empty());
    assert!(traces[1].routed && traces[1].steps.len() == 8);
    assert!(results.join("config.toml").is_file());
}

#[test]
fn run_takes_config_file_with_flags_winning() {
    let dir = tempfile::tempdir().unwrap();
    let backends = scripted_backends(dir.path());
    let results = dir.path().join("results");
    let cfg = dir.path().join("bemas.toml");
    std::fs::write(
        &cfg,
        format!(
            "backends = {:?}\norchestrator_backend = \"planner\"\nspecialist_backend = \"specialist\"\nmode = \"D\"\nresults_dir = {:?}\n",
            p(&backends),
            p(&results)
        ),
    )
    .unwrap();
    let out = run(&["--config", p(&cfg), "--mode", "c2", "--trace", "run", &case_study_request()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let path = text(&out.stderr).lines().find_map(|l| l.strip_prefix("trace: ").map(String::from)).unwrap();
    let trace = SessionTrace::load(Path::new(&path)).unwrap();
    assert_eq!(trace.mode, Mode::C2);
    assert!(trace.error.is_none(), "{:?}", trace.error);
    let snapshot = std::fs::read_to_string(results.join("config.toml")).unwrap();
    assert!(snapshot.contains("mode = \"C2\""), "{snapshot}");
}

#[test]
fn bad_config_and_missing_backends_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "colour = \"blue\"\n").unwrap();
    assert_eq!(run(&["--config", p(&cfg), "run", "hello"]).status.code(), Some(1));
    let out = run(&["run", "hello"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("--backends"));
    assert_eq!(run(&["bench", "--results-dir", p(dir.path())]).status.code(), Some(1));
}
