use bemas_bench::{default_cases, load_cases, parse_cases, write_cases, CaseError, Category};
use bemas_orchestrator::default_cards;
use bemas_runtime::{shared_registry, Runtime};

#[test]
fn shipped_suite_has_53_cases_and_every_category() {
    let cases = default_cases();
    assert_eq!(cases.len(), 53);
    for cat in Category::ALL {
        let n = cases.iter().filter(|c| c.category == cat).count();
        assert!(n >= 12, "{cat}: {n}");
    }
}

#[test]
fn categories_match_step_shapes() {
    for c in default_cases() {
        let multi_agent = c.expected_agents.len() > 1;
        // some agent makes more than one call
        let multi_tool = c.expected_calls().len() > c.expected_agents.len();
        let want = match (multi_agent, multi_tool) {
            (false, false) => Category::Sast,
            (false, true) => Category::Samt,
            (true, false) => Category::Mast,
            (true, true) => Category::Mamt,
        };
        assert_eq!(c.category, want, "{}", c.test_id);
    }
}

#[test]
fn every_expected_tool_exists_and_belongs_to_its_agent() {
    let (_, reg) = shared_registry(Runtime::new());
    let cards = default_cards();
    for c in default_cases() {
        for s in &c.expected_steps {
            let card = cards
                .iter()
                .find(|k| k.agent_id == s.agent_id)
                .unwrap_or_else(|| panic!("{} {}", c.test_id, s.agent_id));
            for t in &s.required_tools {
                assert!(reg.contains(t), "{} unknown tool {t}", c.test_id);
                assert!(card.allows(t), "{}: {} does not own {t}", c.test_id, s.agent_id);
            }
        }
    }
}

#[test]
fn case_study_is_in_the_suite() {
    let c = default_cases().into_iter().find(|c| c.test_id == "MAMT_001").unwrap();
    let agents: Vec<&str> = c.expected_agents.iter().map(String::as_str).collect();
    for a in ["hvac_agent", "der_agent", "simulation_agent", "comparison_agent"] {
        assert!(agents.contains(&a));
    }
    let calls = c.expected_calls();
    assert!(calls.iter().any(|(t, p)| t == "hvac_update" && p["chiller"]["rated_cop"] == 4.5));
    assert!(calls.iter().any(|(t, p)| t == "der_update" && p["battery"]["capacity"] == 20));
    assert_eq!(calls.iter().filter(|(t, _)| t == "simulation_run").count(), 3);
}

#[test]
fn write_then_parse_roundtrips() {
    let cases = default_cases();
    assert_eq!(parse_cases(&write_cases(&cases)).unwrap(), cases);
}

#[test]
fn malformed_line_reports_its_number() {
    let mut lines: Vec<String> = write_cases(&default_cases()[..4]).lines().map(String::from).collect();
    lines[2] = "{\"test_id\": ".into();
    match parse_cases(&lines.join("\n")) {
        Err(e @ CaseError::BadCaseFile { line: 3, .. }) => assert!(e.to_string().starts_with("BadCaseFile:3")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn schema_violations_are_bad_lines() {
    let good = write_cases(&default_cases()[..1]);
    let wrong_prefix = good.replace("\"test_id\":\"SAST_001\"", "\"test_id\":\"MAMT_999\"");
    assert!(matches!(parse_cases(&wrong_prefix), Err(CaseError::BadCaseFile { line: 1, .. })));
    let dup = format!("{good}\n{good}");
    assert!(matches!(parse_cases(&dup), Err(CaseError::BadCaseFile { line: 3, .. })));
    let bad_cat = good.replace("\"SAST\"", "\"XXL\"");
    assert!(matches!(parse_cases(&bad_cat), Err(CaseError::BadCaseFile { line: 1, .. })));
}

#[test]
fn blank_lines_are_skipped_and_files_load() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.jsonl");
    std::fs::write(&p, format!("\n{}\n\n", write_cases(&default_cases()[..2]))).unwrap();
    assert_eq!(load_cases(&p).unwrap().len(), 2);
    assert!(matches!(load_cases(&dir.path().join("missing")), Err(CaseError::Io { .. })));
}
