use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ToolCatalog;
use crate::json::decode;
use crate::pool::AgentPool;
use crate::JsonMap;

/// Planning mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// Centralized, one planning pass with every schema.
    C1,
    /// Centralized, tool routing first and parameters second.
    C2,
    /// Decentralized; agents pick their own calls.
    D,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::C1, Mode::C2, Mode::D];

    pub fn is_centralized(self) -> bool {
        self != Mode::D
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::C1 => "C1",
            Mode::C2 => "C2",
            Mode::D => "D",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "").as_str() {
            "c1" => Ok(Mode::C1),
            "c2" => Ok(Mode::C2),
            "d" => Ok(Mode::D),
            other => Err(format!("unknown mode '{other}', expected c1, c2 or d")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInstruction {
    pub tool: String,
    #[serde(default)]
    pub parameters: JsonMap,
    #[serde(default)]
    pub expected_output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrchestratorGuidance {
    pub tool_instructions: Vec<ToolInstruction>,
    #[serde(default)]
    pub validation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub step_id: String,
    pub agent_id: String,
    #[serde(default)]
    pub task: String,
    #[serde(default)]
    pub depends_on: Vec<String>,
    #[serde(default, rename = "orchestrator_guidance", skip_serializing_if = "Option::is_none")]
    pub guidance: Option<OrchestratorGuidance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tools_to_use: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_outcome: Option<String>,
}

impl PlanStep {
    /// Tools this step names in its guidance, or else in `tools_to_use`.
    pub fn named_tools(&self) -> Vec<&str> {
        match (&self.guidance, &self.tools_to_use) {
            (Some(g), _) => g.tool_instructions.iter().map(|i| i.tool.as_str()).collect(),
            (None, Some(t)) => t.iter().map(String::as_str).collect(),
            (None, None) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    #[serde(default)]
    pub understanding: String,
    #[serde(default)]
    pub reasoning: String,
    pub mode: Mode,
    pub steps: Vec<PlanStep>,
}

#[derive(Deserialize)]
struct RawPlan {
    #[serde(default)]
    understanding: String,
    #[serde(default)]
    reasoning: String,
    steps: Vec<PlanStep>,
}

/// Decodes an LLM planning reply. An empty step list counts as malformed.
pub fn parse_plan(text: &str, mode: Mode) -> Result<ExecutionPlan, String> {
    let raw: RawPlan = decode(text)?;
    if raw.steps.is_empty() {
        return Err("plan has no steps".into());
    }
    Ok(ExecutionPlan { understanding: raw.understanding, reasoning: raw.reasoning, mode, steps: raw.steps })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanViolation {
    NoSteps,
    DuplicateStepId(String),
    UnknownAgent { step: String, agent: String },
    UnknownDependency { step: String, dependency: String },
    ForwardDependency { step: String, dependency: String },
    Cycle(Vec<String>),
    MissingGuidance(String),
    EmptyGuidance(String),
    EmptyToolsToUse(String),
    UnknownTool { step: String, tool: String },
    NotWhitelisted { step: String, agent: String, tool: String },
    MissingExpectedOutcome(String),
}

impl fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanViolation::NoSteps => write!(f, "plan has no steps"),
            PlanViolation::DuplicateStepId(s) => write!(f, "duplicate step_id '{s}'"),
            PlanViolation::UnknownAgent { step, agent } => {
                write!(f, "agent: step '{step}' names unknown agent '{agent}'")
            }
            PlanViolation::UnknownDependency { step, dependency } => {
                write!(f, "dependency: step '{step}' depends on unknown step '{dependency}'")
            }
            PlanViolation::ForwardDependency { step, dependency } => {
                write!(f, "dependency: step '{step}' depends on later step '{dependency}'")
            }
            PlanViolation::Cycle(path) => write!(f, "cycle: {}", path.join(" -> ")),
            PlanViolation::MissingGuidance(s) => write!(f, "guidance: step '{s}' has no orchestrator_guidance"),
            PlanViolation::EmptyGuidance(s) => write!(f, "guidance: step '{s}' has no tool instructions"),
            PlanViolation::EmptyToolsToUse(s) => write!(f, "empty tools_to_use in step '{s}'"),
            PlanViolation::UnknownTool { step, tool } => write!(f, "tool: step '{step}' names unknown tool '{tool}'"),
            PlanViolation::NotWhitelisted { step, agent, tool } => {
                write!(f, "whitelist: step '{step}' gives '{agent}' tool '{tool}' outside its card")
            }
            PlanViolation::MissingExpectedOutcome(s) => write!(f, "step '{s}' has no expected_outcome"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid plan: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct InvalidPlan(pub Vec<PlanViolation>);

impl InvalidPlan {
    pub fn violations(&self) -> &[PlanViolation] {
        &self.0
    }
}

fn structure(plan: &ExecutionPlan, pool: &AgentPool, out: &mut Vec<PlanViolation>) {
    if plan.steps.is_empty() {
        out.push(PlanViolation::NoSteps);
        return;
    }
    let mut position: HashMap<&str, usize> = HashMap::new();
    for (i, s) in plan.steps.iter().enumerate() {
        if position.insert(&s.step_id, i).is_some() {
            out.push(PlanViolation::DuplicateStepId(s.step_id.clone()));
        }
        if pool.card(&s.agent_id).is_none() {
            out.push(PlanViolation::UnknownAgent { step: s.step_id.clone(), agent: s.agent_id.clone() });
        }
    }
    let mut unknown = HashSet::new();
    for s in &plan.steps {
        for d in &s.depends_on {
            if !position.contains_key(d.as_str()) {
                unknown.insert(d.clone());
                out.push(PlanViolation::UnknownDependency { step: s.step_id.clone(), dependency: d.clone() });
            }
        }
    }
    if let Some(cycle) = find_cycle(plan) {
        out.push(PlanViolation::Cycle(cycle));
        return;
    }
    for (i, s) in plan.steps.iter().enumerate() {
        for d in &s.depends_on {
            if position.get(d.as_str()).is_some_and(|&j| j > i) {
                out.push(PlanViolation::ForwardDependency { step: s.step_id.clone(), dependency: d.clone() });
            }
        }
    }
}

/// A dependency cycle as a closed path of step ids, if one exists.
fn find_cycle(plan: &ExecutionPlan) -> Option<Vec<String>> {
    let ids: HashMap<&str, usize> = plan.steps.iter().enumerate().map(|(i, s)| (s.step_id.as_str(), i)).collect();
    let edges: Vec<Vec<usize>> =
        plan.steps.iter().map(|s| s.depends_on.iter().filter_map(|d| ids.get(d.as_str()).copied()).collect()).collect();
    // 0 unvisited, 1 on stack, 2 done
    let mut state = vec![0u8; plan.steps.len()];
    let mut stack = Vec::new();
    fn visit(n: usize, edges: &[Vec<usize>], state: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
        state[n] = 1;
        stack.push(n);
        for &m in &edges[n] {
            if state[m] == 1 {
                let start = stack.iter().position(|&x| x == m).expect("on stack");
                let mut cycle = stack[start..].to_vec();
                cycle.push(m);
                return Some(cycle);
            }
            if state[m] == 0 {
                if let Some(c) = visit(m, edges, state, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        state[n] = 2;
        None
    }
    for n in 0..plan.steps.len() {
        if state[n] == 0 {
            if let Some(c) = visit(n, &edges, &mut state, &mut stack) {
                return Some(c.into_iter().map(|i| plan.steps[i].step_id.clone()).collect());
            }
        }
    }
    None
}

fn check_tool(step: &PlanStep, tool: &str, pool: &AgentPool, catalog: &ToolCatalog, out: &mut Vec<PlanViolation>) {
    if !catalog.contains(tool) {
        out.push(PlanViolation::UnknownTool { step: step.step_id.clone(), tool: tool.to_string() });
    } else if pool.card(&step.agent_id).is_some_and(|c| !c.allows(tool)) {
        out.push(PlanViolation::NotWhitelisted {
            step: step.step_id.clone(),
            agent: step.agent_id.clone(),
            tool: tool.to_string(),
        });
    }
}

fn finish(out: Vec<PlanViolation>) -> Result<(), InvalidPlan> {
    if out.is_empty() {
        Ok(())
    } else {
        Err(InvalidPlan(out))
    }
}

/// Checks a routing outline: structure plus non-empty, owned `tools_to_use`.
pub fn validate_stage1(plan: &ExecutionPlan, pool: &AgentPool, catalog: &ToolCatalog) -> Result<(), InvalidPlan> {
    let mut out = Vec::new();
    structure(plan, pool, &mut out);
    for s in &plan.steps {
        match &s.tools_to_use {
            None => out.push(PlanViolation::EmptyToolsToUse(s.step_id.clone())),
            Some(t) if t.is_empty() => out.push(PlanViolation::EmptyToolsToUse(s.step_id.clone())),
            Some(t) => t.iter().for_each(|tool| check_tool(s, tool, pool, catalog, &mut out)),
        }
    }
    finish(out)
}

/// Checks every plan invariant for `plan.mode`.
pub fn validate_plan(plan: &ExecutionPlan, pool: &AgentPool, catalog: &ToolCatalog) -> Result<(), InvalidPlan> {
    let mut out = Vec::new();
    structure(plan, pool, &mut out);
    for s in &plan.steps {
        if plan.mode.is_centralized() {
            match &s.guidance {
                None => out.push(PlanViolation::MissingGuidance(s.step_id.clone())),
                Some(g) if g.tool_instructions.is_empty() => out.push(PlanViolation::EmptyGuidance(s.step_id.clone())),
                Some(g) => g.tool_instructions.iter().for_each(|i| check_tool(s, &i.tool, pool, catalog, &mut out)),
            }
        } else if s.expected_outcome.is_none() {
            out.push(PlanViolation::MissingExpectedOutcome(s.step_id.clone()));
        }
    }
    finish(out)
}

/// Drops fields the mode does not allow, logging each removal.
pub(crate) fn enforce_mode_fields(plan: &mut ExecutionPlan) {
    for s in &mut plan.steps {
        match plan.mode {
            Mode::D => {
                if s.guidance.take().is_some() {
                    log::warn!("step {}: orchestrator_guidance ignored in decentralized mode", s.step_id);
                }
                if s.tools_to_use.take().is_some() {
                    log::warn!("step {}: tools_to_use ignored in decentralized mode", s.step_id);
                }
            }
            Mode::C1 | Mode::C2 => {
                if s.expected_outcome.take().is_some() {
                    log::warn!("step {}: expected_outcome ignored in centralized mode", s.step_id);
                }
                if s.tools_to_use.take().is_some() {
                    log::debug!("step {}: tools_to_use dropped from final plan", s.step_id);
                }
            }
        }
    }
}

/// Step indices in dependency order; ties go to the earlier-declared step.
pub(crate) fn topo_order(plan: &ExecutionPlan) -> Vec<usize> {
    let ids: HashMap<&str, usize> = plan.steps.iter().enumerate().map(|(i, s)| (s.step_id.as_str(), i)).collect();
    let n = plan.steps.len();
    let mut indeg = vec![0usize; n];
    let mut users = vec![Vec::new(); n];
    for (i, s) in plan.steps.iter().enumerate() {
        for d in &s.depends_on {
            if let Some(&j) = ids.get(d.as_str()) {
                indeg[i] += 1;
                users[j].push(i);
            }
        }
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &u in &users[i] {
            indeg[u] -= 1;
            if indeg[u] == 0 {
                ready.insert(u);
            }
        }
    }
    order
}
