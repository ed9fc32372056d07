use bemas_bench::{
    aggregate, default_cases, golden_scripts, read_records, run_case, run_matrix, write_report, Fault, GoldenFactory,
    GroupBy, MatrixConfig, RegistryFactory, RunConfig, RunRecord, TestCase, Tier, TierPair, ToolMetric,
};
use bemas_llm::{BackendRegistry, BackendSpec, Pricing};
use bemas_orchestrator::{Adherence, DeviationType, Mode};

fn case(id: &str) -> TestCase {
    default_cases().into_iter().find(|c| c.test_id == id).unwrap()
}

fn pair() -> TierPair {
    TierPair::new(Tier::Api, Tier::M)
}

fn run(id: &str, mode: Mode, fault: Option<Fault>) -> RunRecord {
    let mut f = GoldenFactory::new();
    if let Some(x) = fault {
        f = f.with_fault(id, x);
    }
    run_case(&case(id), &RunConfig::new(mode, pair()), &f)
}

/// Drops clock-dependent fields.
fn timeless(mut r: RunRecord) -> RunRecord {
    r.total_time_s = 0.0;
    r.planning_time_s = 0.0;
    r.execution_time_s = 0.0;
    r.synthesis_time_s = 0.0;
    r
}

#[test]
fn dropping_one_of_two_tools_halves_tool_accuracy() {
    for mode in [Mode::C1, Mode::C2] {
        let r = run("SAMT_008", mode, Some(Fault::DropTool { step: 1, tool: "config_query".into() }));
        assert_eq!(r.acc_tool, 0.5, "{mode}");
        assert_eq!(r.adherence, Some(Adherence::Deviated(DeviationType::ToolRemoval)));
        assert!(!r.crashed);
    }
    let r = run("SAMT_008", Mode::D, Some(Fault::DropTool { step: 1, tool: "config_query".into() }));
    assert_eq!((r.acc_tool, r.adherence), (0.5, None));
}

#[test]
fn swapping_two_steps_halves_plan_accuracy() {
    for mode in Mode::ALL {
        let r = run("MAST_011", mode, Some(Fault::SwapSteps { a: 1, b: 2 }));
        assert_eq!(r.acc_plan, 0.5, "{mode}");
        assert_eq!((r.acc_tool, r.acc_agent, r.acc_val), (1.0, 1.0, 1.0));
    }
}

#[test]
fn perturbing_one_of_two_values_halves_value_accuracy() {
    for mode in Mode::ALL {
        let fault = Fault::PerturbParam { step: 1, tool: "hvac_update".into(), key: "chiller.rated_cop".into() };
        let r = run("SAST_005", mode, Some(fault));
        assert_eq!((r.acc_key, r.acc_val), (1.0, 0.5), "{mode}");
        if mode.is_centralized() {
            // the specialist did what it was told
            assert_eq!(r.adherence, Some(Adherence::Followed));
        }
    }
}

#[test]
fn failed_planning_scores_zero_without_crashing() {
    let r = run("MAST_003", Mode::C2, Some(Fault::FailPlanning));
    assert!(!r.crashed);
    assert!(r.error.is_some());
    assert_eq!(r.accuracies(), [0.0; 6]);
    assert!(r.orchestrator_tokens > 0 || r.llm_calls > 0);
}

#[test]
fn crashing_backend_is_contained() {
    let r = run("MAST_003", Mode::C1, Some(Fault::Crash));
    assert!(r.crashed);
    assert_eq!(r.accuracies(), [0.0; 6]);
    assert!(r.error.as_deref().unwrap().contains("crashed"), "{:?}", r.error);
}

#[test]
fn usage_partitions_sum() {
    for id in ["SAST_001", "MAMT_001"] {
        for mode in Mode::ALL {
            let r = run(id, mode, None);
            assert_eq!(r.orchestrator_tokens + r.agent_tokens, r.total_tokens);
            assert!((r.orchestrator_cost + r.agent_cost - r.total_cost).abs() < 1e-12);
            assert!(r.orchestrator_tokens > 0 && r.agent_tokens > 0);
            // free specialist tier
            assert_eq!(r.agent_cost, 0.0);
            assert!(r.orchestrator_cost > 0.0);
        }
    }
}

#[test]
fn jaccard_flag_scores_extras() {
    let mut cfg = RunConfig::new(Mode::C1, pair());
    cfg.tool_metric = ToolMetric::Jaccard;
    let r = run_case(&case("SAST_004"), &cfg, &GoldenFactory::new());
    assert_eq!((r.acc_tool, r.tool_metric), (1.0, ToolMetric::Jaccard));
}

#[test]
fn matrix_cardinality_and_order() {
    let cases: Vec<TestCase> = default_cases().into_iter().take(2).collect();
    let cfg = MatrixConfig::new(Mode::ALL.to_vec(), vec![pair()]);
    let records = run_matrix(&cases, &cfg, &GoldenFactory::new());
    assert_eq!(records.len(), 6);
    let keys: Vec<(String, Mode)> = records.iter().map(|r| (r.test_id.clone(), r.mode)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    for row in aggregate(&records, GroupBy::Mode) {
        assert_eq!((row.runs, row.acc_combined), (2, 1.0));
    }
}

#[test]
fn permuting_cases_changes_no_record() {
    let mut cases: Vec<TestCase> =
        default_cases().into_iter().filter(|c| c.test_id.starts_with("MA")).take(8).collect();
    let cfg = MatrixConfig { parallelism: 4, ..MatrixConfig::new(vec![Mode::C2, Mode::D], vec![pair()]) };
    let a: Vec<RunRecord> = run_matrix(&cases, &cfg, &GoldenFactory::new()).into_iter().map(timeless).collect();
    cases.reverse();
    cases.rotate_left(3);
    let b: Vec<RunRecord> = run_matrix(&cases, &cfg, &GoldenFactory::new()).into_iter().map(timeless).collect();
    assert_eq!(a, b);
}

#[test]
fn crash_in_one_run_leaves_the_others() {
    let cases: Vec<TestCase> = default_cases().into_iter().take(3).collect();
    let f = GoldenFactory::new().with_fault(cases[1].test_id.clone(), Fault::Crash);
    let records = run_matrix(&cases, &MatrixConfig::new(vec![Mode::C1], vec![pair()]), &f);
    assert_eq!(records.len(), 3);
    let crashed: Vec<bool> = records.iter().map(|r| r.crashed).collect();
    assert_eq!(crashed, [false, true, false]);
    assert_eq!(records[0].acc_combined, 1.0);
}

#[test]
fn report_files_roundtrip_and_name_every_metric() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<TestCase> = default_cases().into_iter().take(2).collect();
    let cfg =
        MatrixConfig { out_dir: Some(dir.path().to_path_buf()), ..MatrixConfig::new(Mode::ALL.to_vec(), vec![pair()]) };
    let records = run_matrix(&cases, &cfg, &GoldenFactory::new());
    write_report(&records, dir.path()).unwrap();
    assert_eq!(read_records(&dir.path().join("records.jsonl")).unwrap(), records);
    for r in &records {
        assert!(std::path::Path::new(r.trace.as_deref().unwrap()).is_file());
    }
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    for name in [
        "Tool selection accuracy",
        "Agent selection accuracy",
        "Plan step accuracy",
        "Parameter accuracy (key)",
        "Parameter accuracy (value)",
        "Total time",
        "Planning time",
        "Execution time",
        "Synthesis time",
        "Orchestrator tokens",
        "Agent tokens",
        "Total tokens",
        "Orchestrator cost",
        "Agent cost",
        "Total cost",
        "Adherence rate",
    ] {
        assert!(header.contains(name), "{name}");
    }
    let mode_rows = csv.lines().filter(|l| l.ends_with(",mode,recall")).count();
    assert_eq!(mode_rows, 3);
}

#[test]
fn adherence_shares_split_deviating_runs() {
    let f = GoldenFactory::new()
        .with_fault("SAMT_008", Fault::DropTool { step: 1, tool: "config_query".into() })
        .with_fault("SAMT_002", Fault::DropTool { step: 1, tool: "hvac_query".into() });
    let cases: Vec<TestCase> = default_cases()
        .into_iter()
        .filter(|c| ["SAMT_002", "SAMT_008", "SAST_001", "SAST_002"].contains(&c.test_id.as_str()))
        .collect();
    let records = run_matrix(&cases, &MatrixConfig::new(vec![Mode::C1, Mode::D], vec![pair()]), &f);
    let rows = aggregate(&records, GroupBy::Mode);
    let c1 = rows.iter().find(|r| r.group == "C1").unwrap();
    assert_eq!(c1.adherence_rate, Some(0.5));
    assert_eq!(c1.deviation_shares[&DeviationType::ToolRemoval], 1.0);
    let d = rows.iter().find(|r| r.group == "D").unwrap();
    assert_eq!(d.adherence_rate, None);
}

#[test]
fn registry_factory_builds_backends_by_tier_label() {
    let dir = tempfile::tempdir().unwrap();
    let c = case("MAST_004");
    let scripts = golden_scripts(&c, Mode::C2, None);
    std::fs::write(dir.path().join("planner.json"), serde_json::to_string(&scripts.planner).unwrap()).unwrap();
    std::fs::write(dir.path().join("spec.json"), serde_json::to_string(&scripts.specialist).unwrap()).unwrap();
    let mut api = BackendSpec::scripted("API", Pricing::new(0.15, 0.60));
    api.script_path = Some(dir.path().join("planner.json"));
    let mut s = BackendSpec::scripted("S", Pricing::FREE);
    s.script_path = Some(dir.path().join("spec.json"));
    let f = RegistryFactory::new(BackendRegistry::from_specs([api, s]).unwrap());
    let r = run_case(&c, &RunConfig::new(Mode::C2, TierPair::new(Tier::Api, Tier::S)), &f);
    assert_eq!(r.acc_combined, 1.0, "{:?}", r.error);
    let r = run_case(&c, &RunConfig::new(Mode::C2, TierPair::new(Tier::L, Tier::S)), &f);
    assert!(r.crashed && r.error.as_deref().unwrap().contains('L'));
}
