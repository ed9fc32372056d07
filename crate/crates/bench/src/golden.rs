//! Scripted backends that replay a case's ground truth, optionally with an
//! injected fault.

use std::sync::Arc;

use bemas_llm::{
    Backend, CompletionParams, Fault as LlmFault, LlmError, Matcher, Message, Pricing, RawCompletion, Rule, Script,
    ScriptedBackend,
};
use bemas_orchestrator::{JsonMap, Mode, Template, ROUTE_MARKER};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::case::TestCase;

/// Deviation from the ground truth built into a golden script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "fault")]
pub enum Fault {
    /// The specialist of step `step` leaves out `tool`.
    DropTool { step: u32, tool: String },
    /// The planner lists the two steps in each other's place.
    SwapSteps { a: u32, b: u32 },
    /// The planner passes a different value for dotted `key` of `tool`.
    PerturbParam { step: u32, tool: String, key: String },
    /// Every planning call fails with an unavailable backend.
    FailPlanning,
    /// The planner backend panics on its first call.
    Crash,
}

pub struct GoldenScripts {
    pub planner: Script,
    pub specialist: Script,
}

fn anchored(t: Template) -> String {
    let head = t.heading();
    let mut re = String::from(r"\A");
    for c in head.chars() {
        if c.is_alphanumeric() || c == ' ' {
            re.push(c);
        } else {
            re.push('\\');
            re.push(c);
        }
    }
    re
}

fn on(t: Template) -> Matcher {
    Matcher::regex(anchored(t))
}

fn on_with(t: Template, substring: &str) -> Matcher {
    Matcher { substring: Some(substring.to_string()), ..on(t) }
}

/// Unique tag that names a case step inside prompts.
pub fn marker(case: &TestCase, step_order: u32) -> String {
    format!("[{}#{}]", case.test_id, step_order)
}

/// Rebuilds nested maps from dotted keys.
pub fn unflatten(map: &JsonMap) -> JsonMap {
    let mut out = JsonMap::new();
    for (k, v) in map {
        let v = match v {
            Value::Object(m) => Value::Object(unflatten(m)),
            other => other.clone(),
        };
        let parts: Vec<&str> = k.split('.').collect();
        let mut cur = &mut out;
        for p in &parts[..parts.len() - 1] {
            let slot = cur.entry(p.to_string()).or_insert_with(|| Value::Object(JsonMap::new()));
            if !slot.is_object() {
                *slot = Value::Object(JsonMap::new());
            }
            cur = slot.as_object_mut().expect("object");
        }
        let last = parts[parts.len() - 1].to_string();
        match (cur.get_mut(&last), v) {
            (Some(Value::Object(existing)), Value::Object(add)) => existing.extend(add),
            (_, v) => {
                cur.insert(last, v);
            }
        }
    }
    out
}

fn perturb(v: &Value) -> Value {
    match v {
        Value::Number(n) => json!(n.as_f64().unwrap_or(0.0) + 1.0),
        Value::Bool(b) => json!(!b),
        Value::String(s) => json!(format!("{s}_alt")),
        Value::Array(a) => {
            let mut a = a.clone();
            a.push(json!("extra"));
            Value::Array(a)
        }
        other => json!(format!("{other}_alt")),
    }
}

fn perturb_at(map: &mut JsonMap, path: &[&str]) -> bool {
    let Some((head, rest)) = path.split_first() else { return false };
    match (map.get_mut(*head), rest.is_empty()) {
        (Some(v), true) => {
            *v = perturb(v);
            true
        }
        (Some(Value::Object(m)), false) => perturb_at(m, rest),
        _ => false,
    }
}

struct PlannedStep {
    order: u32,
    agent: String,
    task: String,
    calls: Vec<(String, JsonMap)>,
    executed: Vec<(String, JsonMap)>,
}

fn planned_steps(case: &TestCase, fault: Option<&Fault>) -> Vec<PlannedStep> {
    let mut steps: Vec<PlannedStep> = case
        .expected_steps
        .iter()
        .map(|s| {
            let mut calls: Vec<(String, JsonMap)> =
                s.required_tools.iter().map(|t| (t.clone(), unflatten(&s.params_for(t)))).collect();
            if let Some(Fault::PerturbParam { step, tool, key }) = fault {
                if *step == s.step_order {
                    let path: Vec<&str> = key.split('.').collect();
                    if let Some((_, p)) = calls.iter_mut().find(|(t, _)| t == tool) {
                        perturb_at(p, &path);
                    }
                }
            }
            let mut executed = calls.clone();
            if let Some(Fault::DropTool { step, tool }) = fault {
                if *step == s.step_order {
                    if let Some(i) = executed.iter().position(|(t, _)| t == tool) {
                        executed.remove(i);
                    }
                }
            }
            let task = format!("{} {} uses {}", marker(case, s.step_order), s.agent_id, s.required_tools.join(", "));
            PlannedStep { order: s.step_order, agent: s.agent_id.clone(), task, calls, executed }
        })
        .collect();
    if let Some(Fault::SwapSteps { a, b }) = fault {
        let i = steps.iter().position(|s| s.order == *a);
        let j = steps.iter().position(|s| s.order == *b);
        if let (Some(i), Some(j)) = (i, j) {
            steps.swap(i, j);
        }
    }
    steps
}

fn instructions(calls: &[(String, JsonMap)]) -> Value {
    Value::Array(
        calls
            .iter()
            .map(|(t, p)| json!({"tool": t, "parameters": p, "expected_output": format!("{t} succeeds")}))
            .collect(),
    )
}

fn step_json(s: &PlannedStep, prev: Option<&PlannedStep>, mode: Mode, stage1: bool) -> Value {
    let mut v = json!({
        "step_id": format!("step_{}", s.order),
        "agent_id": s.agent,
        "task": s.task,
        "depends_on": prev.map(|p| vec![format!("step_{}", p.order)]).unwrap_or_default(),
    });
    let o = v.as_object_mut().expect("object");
    match (mode, stage1) {
        (Mode::D, _) => {
            o.insert("expected_outcome".into(), json!(format!("{} completed", s.task)));
        }
        (Mode::C2, true) => {
            let mut tools: Vec<&str> = Vec::new();
            for (t, _) in &s.calls {
                if !tools.contains(&t.as_str()) {
                    tools.push(t);
                }
            }
            o.insert("tools_to_use".into(), json!(tools));
        }
        _ => {
            o.insert(
                "orchestrator_guidance".into(),
                json!({"tool_instructions": instructions(&s.calls), "validation": "every call succeeds"}),
            );
        }
    }
    v
}

fn plan_json(case: &TestCase, steps: &[PlannedStep], mode: Mode, stage1: bool) -> String {
    let list: Vec<Value> = steps
        .iter()
        .enumerate()
        .map(|(i, s)| step_json(s, i.checked_sub(1).map(|p| &steps[p]), mode, stage1))
        .collect();
    json!({
        "understanding": case.request,
        "reasoning": format!("{} needs {} step(s)", case.test_id, steps.len()),
        "steps": list,
    })
    .to_string()
}

/// Planner and specialist scripts that reproduce `case` under `mode`.
pub fn golden_scripts(case: &TestCase, mode: Mode, fault: Option<&Fault>) -> GoldenScripts {
    let steps = planned_steps(case, fault);
    let mut planner = vec![Rule::text(on(Template::Concierge), format!("Working on it.\n{ROUTE_MARKER}"))];
    let planning: Vec<(Template, String)> = match mode {
        Mode::C1 => vec![(Template::PlanC1, plan_json(case, &steps, mode, false))],
        Mode::C2 => vec![
            (Template::PlanC2Stage1, plan_json(case, &steps, mode, true)),
            (Template::PlanC2Stage2, plan_json(case, &steps, mode, false)),
        ],
        Mode::D => vec![(Template::PlanD, plan_json(case, &steps, mode, false))],
    };
    for (t, text) in planning {
        if matches!(fault, Some(Fault::FailPlanning)) {
            planner.push(Rule::fault(on(t), LlmFault::Unavailable));
        } else {
            planner.push(Rule::text(on(t), text));
        }
    }
    planner.push(Rule::echo(on(Template::Format)));

    let mut specialist = Vec::new();
    for s in &steps {
        let tag = marker(case, s.order);
        let calls: Vec<Value> =
            s.executed.iter().map(|(t, p)| json!({"tool": t, "parameters": p, "reason": "matches the task"})).collect();
        if mode.is_centralized() {
            let validation = if s.executed == s.calls { "valid" } else { "needs_adjustment" };
            let reply = json!({"validation": validation, "reasoning": "checked against the task", "refined_instructions": calls});
            specialist.push(Rule::text(on_with(Template::SpecialistCheck, &tag), reply.to_string()));
        } else {
            let planned: Vec<Value> =
                s.executed.iter().map(|(t, p)| json!({"tool": t, "parameters": p, "reasoning": "needed"})).collect();
            let reply = json!({"reasoning": "direct mapping of the task", "tool_calls": planned});
            specialist.push(Rule::text(on_with(Template::SpecialistPlan, &tag), reply.to_string()));
        }
    }
    specialist.push(Rule::echo(on(Template::SpecialistReport)));
    GoldenScripts { planner: Script::new(planner), specialist: Script::new(specialist) }
}

/// Backend that panics when called; stands in for a crashing client.
#[derive(Debug)]
pub struct CrashingBackend {
    id: String,
}

impl CrashingBackend {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into() }
    }
}

impl Backend for CrashingBackend {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn pricing(&self) -> Pricing {
        Pricing::new(0.0, 0.0)
    }

    fn raw_complete(&self, _: &[Message], _: &CompletionParams) -> Result<RawCompletion, LlmError> {
        panic!("backend '{}' crashed", self.id)
    }
}

/// Both scripted backends for one run.
pub fn golden_backends(
    case: &TestCase,
    mode: Mode,
    fault: Option<&Fault>,
    planner: (&str, Pricing),
    specialist: (&str, Pricing),
) -> (Arc<dyn Backend>, Arc<dyn Backend>) {
    let scripts = golden_scripts(case, mode, fault);
    let p: Arc<dyn Backend> = match fault {
        Some(Fault::Crash) => Arc::new(CrashingBackend::new(planner.0)),
        _ => Arc::new(ScriptedBackend::new(planner.0, scripts.planner, planner.1).expect("generated script compiles")),
    };
    let s: Arc<dyn Backend> = Arc::new(
        ScriptedBackend::new(specialist.0, scripts.specialist, specialist.1).expect("generated script compiles"),
    );
    (p, s)
}
