#![allow(dead_code)]

use std::sync::Arc;

use bemas_llm::{Backend, Matcher, Pricing, Rule, Script, ScriptedBackend};
use bemas_orchestrator::{default_cards, AgentCard, Mode, Orchestrator, OrchestratorOptions, ROUTE_MARKER};
use bemas_runtime::{shared_registry, Runtime};
use bemas_toolbus::ToolBus;
use serde_json::Value;

pub fn on(heading: &str, contains: &str) -> Matcher {
    Matcher {
        regex: Some(format!(r"\A# {}", regex_escape(heading))),
        substring: (!contains.is_empty()).then(|| contains.to_string()),
        call_index: None,
    }
}

fn regex_escape(s: &str) -> String {
    s.chars().flat_map(|c| if c.is_alphanumeric() || c == ' ' { vec![c] } else { vec!['\\', c] }).collect()
}

pub fn reply(heading: &str, contains: &str, value: Value) -> Rule {
    Rule::text(on(heading, contains), value.to_string())
}

pub fn route() -> Rule {
    Rule::text(on("Concierge", ""), format!("Sure, working on it.\n{ROUTE_MARKER}"))
}

/// Fallbacks appended after test-specific rules.
fn tail(rules: Vec<Rule>) -> Vec<Rule> {
    let mut rules = rules;
    rules.push(Rule::echo(on("Specialist report", "")));
    rules.push(Rule::echo(on("Final report", "")));
    rules
}

pub fn backend(id: &str, rules: Vec<Rule>) -> Arc<dyn Backend> {
    Arc::new(ScriptedBackend::new(id, Script::new(tail(rules)), Pricing::new(1.0, 2.0)).unwrap())
}

pub struct Fixture {
    pub orch: Orchestrator,
    pub bus: Arc<ToolBus>,
    pub runtime: bemas_runtime::tools::SharedRuntime,
}

pub fn fixture_with(cards: Vec<AgentCard>, mode: Mode, planner: Vec<Rule>, specialist: Vec<Rule>) -> Fixture {
    let (runtime, registry) = shared_registry(Runtime::new());
    let bus = Arc::new(ToolBus::new(registry));
    let orch = Orchestrator::over_bus(bus.clone(), cards, backend("planner", planner), backend("worker", specialist))
        .unwrap()
        .with_options(OrchestratorOptions { mode, ..Default::default() });
    Fixture { orch, bus, runtime }
}

pub fn fixture(mode: Mode, planner: Vec<Rule>, specialist: Vec<Rule>) -> Fixture {
    fixture_with(default_cards(), mode, planner, specialist)
}
