mod common;

use bemas_orchestrator::{load_cards_dir, HrError, Mode, Modification, ModificationAction, OrchestratorOptions};
use common::{fixture, reply, route};
use serde_json::json;

fn create(id: &str, tools: &[&str]) -> Modification {
    serde_json::from_value(json!({
        "action": "create", "agent_id": id, "name": "Weather Analyst", "role": "Reads weather and tariffs",
        "tools": tools, "reason": "needed"
    }))
    .unwrap()
}

#[test]
fn created_agent_is_persisted_and_granted() {
    let dir = tempfile::tempdir().unwrap();
    let mut f = fixture(Mode::C1, vec![], vec![]);
    f.orch = f.orch.with_options(OrchestratorOptions { cards_dir: Some(dir.path().into()), ..Default::default() });
    let touched = f.orch.hr_apply(&[create("weather_agent", &["hvac_query"])]).unwrap();
    assert_eq!(touched, vec!["weather_agent"]);
    assert_eq!(f.orch.pool().len(), 12);
    let reloaded = load_cards_dir(dir.path()).unwrap();
    assert_eq!(reloaded.len(), 1);
    assert_eq!(reloaded[0].available_tools, vec!["hvac_query"]);
    assert_eq!(reloaded[0].temperature, 0.3);
    let call = f.bus.invoke("weather_agent", "hvac_query", json!({"system_id": "hvac1"}).as_object().unwrap().clone());
    assert!(call.result.success, "{:?}", call.result.error);
    let denied = f.bus.invoke("weather_agent", "der_query", Default::default());
    assert!(!denied.result.success);
}

#[test]
fn revision_adds_tools() {
    let mut f = fixture(Mode::C1, vec![], vec![]);
    let m: Modification =
        serde_json::from_value(json!({"action": "revise", "agent_id": "hvac_agent", "tools": ["der_query"]})).unwrap();
    f.orch.hr_apply(&[m]).unwrap();
    let card = f.orch.pool().card("hvac_agent").unwrap();
    assert_eq!(card.available_tools.len(), 7);
    assert!(card.allows("der_query"));
}

#[test]
fn removal_is_rejected() {
    let mut f = fixture(Mode::C1, vec![], vec![]);
    let m = Modification {
        action: ModificationAction::Revise,
        agent_id: "hvac_agent".into(),
        name: None,
        role: None,
        description: None,
        tools: Vec::new(),
        remove_tools: vec!["hvac_remove".into()],
        reason: String::new(),
    };
    assert!(matches!(f.orch.hr_apply(&[m]), Err(HrError::InvalidModification(_))));
    assert_eq!(f.orch.pool().card("hvac_agent").unwrap().available_tools.len(), 6);
}

#[test]
fn unknown_tool_is_rejected_and_nothing_applies() {
    let mut f = fixture(Mode::C1, vec![], vec![]);
    let err = f.orch.hr_apply(&[create("ok_agent", &["hvac_query"]), create("bad_agent", &["hvac_teleport"])]);
    assert!(matches!(err, Err(HrError::InvalidModification(_))));
    assert_eq!(f.orch.pool().len(), 11);
}

#[test]
fn duplicate_or_toolless_agents_are_rejected() {
    let mut f = fixture(Mode::C1, vec![], vec![]);
    assert!(f.orch.hr_apply(&[create("hvac_agent", &["hvac_query"])]).is_err());
    assert!(f.orch.hr_apply(&[create("empty_agent", &[])]).is_err());
}

#[test]
fn can_handle_leaves_the_pool_alone() {
    let review = json!({
        "can_handle": true, "analysis": "covered",
        "modifications": [{"action": "create", "agent_id": "x", "name": "X", "role": "x", "tools": ["hvac_query"]}]
    });
    let planner = vec![route(), reply("Pool review", "", review)];
    let mut f = fixture(Mode::C1, planner, vec![]);
    f.orch = f.orch.with_options(OrchestratorOptions { mode: Mode::C1, hr_enabled: true, ..Default::default() });
    let trace = f.orch.handle("Set the chiller COP of hvac1 to 4.5");
    let hr = trace.hr.unwrap();
    assert!(hr.assessment.unwrap().can_handle);
    assert!(hr.applied.is_empty());
    assert_eq!(f.orch.pool().len(), 11);
}

#[test]
fn review_that_cannot_handle_grows_the_pool_before_planning() {
    let review = json!({
        "can_handle": false, "analysis": "missing",
        "modifications": [{"action": "create", "agent_id": "weather_agent", "name": "W", "role": "weather", "tools": ["hvac_query"]}]
    });
    let planner = vec![
        route(),
        reply("Pool review", "", review),
        reply("Centralized plan", "weather_agent", json!({"steps": []})),
    ];
    let mut f = fixture(Mode::C1, planner, vec![]);
    f.orch = f.orch.with_options(OrchestratorOptions { mode: Mode::C1, hr_enabled: true, ..Default::default() });
    let trace = f.orch.handle("Describe hvac1");
    assert_eq!(trace.hr.unwrap().applied, vec!["weather_agent"]);
    // the planning prompt saw the new agent, matched the rule and returned an empty plan
    assert!(trace.error.unwrap().contains("no steps"));
}
