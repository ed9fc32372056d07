mod common;

use bemas_llm::{Matcher, Rule};
use bemas_orchestrator::{Mode, PlanError, PlanViolation};
use common::{fixture, fixture_with, on, reply};
use serde_json::{json, Value};

const REQ: &str = "Set the chiller COP of hvac1 to 4.5";

fn c_step(id: &str, agent: &str, deps: &[&str], tool: &str, params: Value) -> Value {
    json!({
        "step_id": id, "agent_id": agent, "task": format!("{id} task"), "depends_on": deps,
        "orchestrator_guidance": {"tool_instructions": [{"tool": tool, "parameters": params, "expected_output": "done"}], "validation": "check"},
        "tools_to_use": [tool], "expected_outcome": "ignored"
    })
}

fn plan(steps: Vec<Value>) -> Value {
    json!({"understanding": "u", "reasoning": "r", "steps": steps})
}

fn violations(err: PlanError) -> Vec<PlanViolation> {
    match err {
        PlanError::Invalid(p) => p.0,
        other => panic!("expected an invalid plan, got {other}"),
    }
}

#[test]
fn c1_plan_keeps_guidance_and_drops_other_fields() {
    let step = c_step(
        "step_1",
        "hvac_agent",
        &[],
        "hvac_update",
        json!({"system_id": "hvac1", "chiller": {"rated_cop": 4.5}}),
    );
    let f = fixture(Mode::C1, vec![reply("Centralized plan", REQ, plan(vec![step]))], vec![]);
    let p = f.orch.plan_c1(REQ, "ctx").unwrap();
    assert_eq!(p.mode, Mode::C1);
    let s = &p.steps[0];
    assert_eq!(s.guidance.as_ref().unwrap().tool_instructions[0].tool, "hvac_update");
    assert!(s.tools_to_use.is_none());
    assert!(s.expected_outcome.is_none());
}

#[test]
fn cyclic_dependencies_are_rejected() {
    let q = json!({"system_id": "hvac1"});
    let steps = vec![
        c_step("step_1", "hvac_agent", &["step_2"], "hvac_query", q.clone()),
        c_step("step_2", "hvac_agent", &["step_1"], "hvac_query", q),
    ];
    let f = fixture(Mode::C1, vec![reply("Centralized plan", "", plan(steps))], vec![]);
    let v = violations(f.orch.plan_c1(REQ, "").unwrap_err());
    assert!(v.iter().any(|v| matches!(v, PlanViolation::Cycle(_))), "{v:?}");
}

#[test]
fn forward_dependency_is_rejected() {
    let q = json!({"system_id": "hvac1"});
    let steps = vec![
        c_step("step_1", "hvac_agent", &["step_2"], "hvac_query", q.clone()),
        c_step("step_2", "hvac_agent", &[], "hvac_query", q),
    ];
    let f = fixture(Mode::C1, vec![reply("Centralized plan", "", plan(steps))], vec![]);
    let v = violations(f.orch.plan_c1(REQ, "").unwrap_err());
    assert!(v.iter().any(|v| matches!(v, PlanViolation::ForwardDependency { .. })), "{v:?}");
}

#[test]
fn tool_outside_agent_card_is_a_whitelist_violation() {
    let step = c_step("step_1", "hvac_agent", &[], "der_update", json!({"system_id": "der1"}));
    let f = fixture(Mode::C1, vec![reply("Centralized plan", "", plan(vec![step]))], vec![]);
    let v = violations(f.orch.plan_c1(REQ, "").unwrap_err());
    assert!(v.iter().any(|v| v.to_string().starts_with("whitelist:")), "{v:?}");
}

#[test]
fn unknown_agent_and_tool_are_reported() {
    let steps = vec![
        c_step("step_1", "plumber", &[], "hvac_query", json!({})),
        c_step("step_2", "hvac_agent", &[], "hvac_teleport", json!({})),
    ];
    let f = fixture(Mode::C1, vec![reply("Centralized plan", "", plan(steps))], vec![]);
    let v = violations(f.orch.plan_c1(REQ, "").unwrap_err());
    assert!(v.iter().any(|v| v.to_string().starts_with("agent:")));
    assert!(v.iter().any(|v| v.to_string().starts_with("tool:")));
}

#[test]
fn decentralized_plan_drops_guidance() {
    let step = c_step("step_1", "hvac_agent", &[], "hvac_update", json!({"system_id": "hvac1"}));
    let f = fixture(Mode::D, vec![reply("Decentralized plan", "", plan(vec![step]))], vec![]);
    let p = f.orch.plan_d(REQ, "").unwrap();
    assert!(p.steps[0].guidance.is_none());
    assert!(p.steps[0].tools_to_use.is_none());
    assert_eq!(p.steps[0].expected_outcome.as_deref(), Some("ignored"));
}

#[test]
fn decentralized_plan_needs_expected_outcome() {
    let step = json!({"step_id": "step_1", "agent_id": "hvac_agent", "task": "t"});
    let f = fixture(Mode::D, vec![reply("Decentralized plan", "", plan(vec![step]))], vec![]);
    let v = violations(f.orch.plan_d(REQ, "").unwrap_err());
    assert_eq!(v, vec![PlanViolation::MissingExpectedOutcome("step_1".into())]);
}

#[test]
fn empty_plan_is_retried() {
    let step = c_step("step_1", "hvac_agent", &[], "hvac_query", json!({"system_id": "hvac1"}));
    let first =
        Rule::text(Matcher { call_index: Some(1), ..on("Centralized plan", "") }, json!({"steps": []}).to_string());
    let f = fixture(Mode::C1, vec![first, reply("Centralized plan", "", plan(vec![step]))], vec![]);
    assert_eq!(f.orch.plan_c1(REQ, "").unwrap().steps.len(), 1);
    assert_eq!(f.orch.ledger().len(), 2);
}

#[test]
fn planning_gives_up_after_the_retry_budget() {
    let f = fixture(Mode::C1, vec![Rule::text(on("Centralized plan", ""), "I would rather not")], vec![]);
    match f.orch.plan_c1(REQ, "").unwrap_err() {
        PlanError::Malformed { attempts, .. } => assert_eq!(attempts, 3),
        other => panic!("{other}"),
    }
}

#[test]
fn empty_pool_cannot_plan() {
    let f = fixture_with(Vec::new(), Mode::C1, vec![], vec![]);
    assert_eq!(f.orch.plan_c1(REQ, "").unwrap_err(), PlanError::EmptyPool);
    assert_eq!(f.orch.ledger().len(), 0);
}

fn outline() -> Value {
    plan(vec![
        json!({"step_id": "step_1", "agent_id": "hvac_agent", "task": "raise COP", "depends_on": [], "tools_to_use": ["hvac_update"]}),
        json!({"step_id": "step_2", "agent_id": "simulation_agent", "task": "simulate", "depends_on": ["step_1"], "tools_to_use": ["simulation_run"]}),
    ])
}

#[test]
fn routing_outline_needs_tools() {
    let bad = plan(vec![json!({"step_id": "step_1", "agent_id": "hvac_agent", "task": "t", "tools_to_use": []})]);
    let f = fixture(Mode::C2, vec![reply("Routing plan", "", bad)], vec![]);
    let v = violations(f.orch.plan_c2(REQ, "").unwrap_err());
    assert_eq!(v, vec![PlanViolation::EmptyToolsToUse("step_1".into())]);
}

#[test]
fn stage_two_prompt_carries_only_selected_schemas() {
    let f = fixture(Mode::C2, vec![], vec![]);
    let o = bemas_orchestrator::parse_plan(&outline().to_string(), Mode::C2).unwrap();
    let p = f.orch.render_c2_stage2_prompt(REQ, &o);
    assert_eq!(p.matches("### tool: ").count(), 2);
    assert!(p.contains("### tool: hvac_update"));
    assert!(p.contains("### tool: simulation_run"));
    assert!(!p.contains("\"tools_to_use\""));
}

#[test]
fn routing_prompt_is_at_most_half_the_full_prompt() {
    let f = fixture(Mode::C2, vec![], vec![]);
    let full = f.orch.render_c1_prompt(REQ, "ctx");
    let outline = f.orch.render_c2_stage1_prompt(REQ, "ctx");
    assert!(outline.len() * 2 <= full.len(), "{} vs {}", outline.len(), full.len());
}

#[test]
fn two_stage_plan_merges_guidance_into_outline() {
    let detailed = plan(vec![
        c_step(
            "step_1",
            "hvac_agent",
            &[],
            "hvac_update",
            json!({"system_id": "hvac1", "chiller": {"rated_cop": 4.5}}),
        ),
        c_step("step_2", "simulation_agent", &["step_1"], "simulation_run", json!({})),
    ]);
    let f =
        fixture(Mode::C2, vec![reply("Routing plan", REQ, outline()), reply("Parameter plan", REQ, detailed)], vec![]);
    let (o, p) = f.orch.plan_c2(REQ, "").unwrap();
    assert_eq!(o.steps[0].tools_to_use.as_deref(), Some(&["hvac_update".to_string()][..]));
    assert_eq!(p.steps.len(), 2);
    assert!(p.steps.iter().all(|s| s.guidance.is_some() && s.tools_to_use.is_none()));
    assert_eq!(p.steps[1].depends_on, vec!["step_1"]);
    let purposes: Vec<_> = f.orch.ledger().records().into_iter().map(|r| r.purpose).collect();
    assert_eq!(purposes, vec!["planning_stage1", "planning_stage2"]);
}

#[test]
fn stage_two_missing_a_step_is_invalid() {
    let detailed = plan(vec![c_step("step_1", "hvac_agent", &[], "hvac_update", json!({"system_id": "hvac1"}))]);
    let f =
        fixture(Mode::C2, vec![reply("Routing plan", "", outline()), reply("Parameter plan", "", detailed)], vec![]);
    let v = violations(f.orch.plan_c2(REQ, "").unwrap_err());
    assert_eq!(v, vec![PlanViolation::MissingGuidance("step_2".into())]);
}
