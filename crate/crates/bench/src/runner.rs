//! One case under one mode and tier pair, scored against its ground truth.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;

use bemas_llm::{Backend, BackendRegistry};
use bemas_orchestrator::{
    classify, default_cards, Adherence, AgentCard, JsonMap, Mode, Orchestrator, OrchestratorOptions, PromptSet,
    SessionTrace, StepOutcome,
};
use bemas_runtime::{shared_registry, Runtime};
use bemas_toolbus::ToolBus;
use serde::{Deserialize, Serialize};

use crate::case::{Category, TestCase};
use crate::golden::{golden_backends, Fault};
use crate::metrics::{acc_params, acc_plan, combined, recall, MetricError, StepSig, ToolMetric};
use crate::tiers::{Tier, TierPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub test_id: String,
    pub category: Category,
    pub mode: Mode,
    pub orchestrator_tier: Tier,
    pub specialist_tier: Tier,
    pub acc_tool: f64,
    pub acc_agent: f64,
    pub acc_plan: f64,
    pub acc_key: f64,
    pub acc_val: f64,
    pub acc_combined: f64,
    pub tool_metric: ToolMetric,
    pub total_time_s: f64,
    pub planning_time_s: f64,
    pub execution_time_s: f64,
    pub synthesis_time_s: f64,
    pub orchestrator_tokens: u64,
    pub agent_tokens: u64,
    pub total_tokens: u64,
    pub orchestrator_cost: f64,
    pub agent_cost: f64,
    pub total_cost: f64,
    pub llm_calls: usize,
    /// Centralized modes only.
    pub adherence: Option<Adherence>,
    pub error: Option<String>,
    /// The run panicked or its backends could not be built.
    pub crashed: bool,
    /// Path of the saved session trace.
    pub trace: Option<String>,
}

impl RunRecord {
    fn zero(case: &TestCase, mode: Mode, pair: TierPair, metric: ToolMetric, error: String) -> Self {
        Self {
            test_id: case.test_id.clone(),
            category: case.category,
            mode,
            orchestrator_tier: pair.orchestrator,
            specialist_tier: pair.specialist,
            acc_tool: 0.0,
            acc_agent: 0.0,
            acc_plan: 0.0,
            acc_key: 0.0,
            acc_val: 0.0,
            acc_combined: 0.0,
            tool_metric: metric,
            total_time_s: 0.0,
            planning_time_s: 0.0,
            execution_time_s: 0.0,
            synthesis_time_s: 0.0,
            orchestrator_tokens: 0,
            agent_tokens: 0,
            total_tokens: 0,
            orchestrator_cost: 0.0,
            agent_cost: 0.0,
            total_cost: 0.0,
            llm_calls: 0,
            adherence: None,
            error: Some(error),
            crashed: true,
            trace: None,
        }
    }

    pub fn pair(&self) -> TierPair {
        TierPair::new(self.orchestrator_tier, self.specialist_tier)
    }

    pub fn accuracies(&self) -> [f64; 6] {
        [self.acc_tool, self.acc_agent, self.acc_plan, self.acc_key, self.acc_val, self.acc_combined]
    }
}

/// What actually happened in a session, read from its step logs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActualTrace {
    /// (agent, tool, arguments) of every invoked call, in order.
    pub calls: Vec<(String, String, JsonMap)>,
    /// Steps that invoked at least one tool, in execution order.
    pub steps: Vec<StepSig>,
}

impl ActualTrace {
    pub fn from_session(trace: &SessionTrace) -> Self {
        let mut out = ActualTrace::default();
        for r in trace.step_results() {
            if r.executed_calls.is_empty() {
                continue;
            }
            for c in &r.executed_calls {
                out.calls.push((r.agent_id.clone(), c.call.tool.clone(), c.call.arguments.clone()));
            }
            out.steps.push(StepSig::new(&r.agent_id, &r.tools()));
        }
        out
    }

    pub fn tools(&self) -> Vec<&str> {
        self.calls.iter().map(|(_, t, _)| t.as_str()).collect()
    }

    pub fn agents(&self) -> Vec<&str> {
        self.calls.iter().map(|(a, _, _)| a.as_str()).collect()
    }

    pub fn tool_calls(&self) -> Vec<(String, JsonMap)> {
        self.calls.iter().map(|(_, t, p)| (t.clone(), p.clone())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub tool: f64,
    pub agent: f64,
    pub plan: f64,
    pub key: f64,
    pub val: f64,
    pub combined: f64,
}

/// Scores an actual trace against a case.
pub fn score(case: &TestCase, actual: &ActualTrace, metric: ToolMetric) -> Scores {
    let tools = actual.tools();
    let tool = metric.score(&case.expected_tools, &tools).expect("validated case").value();
    let agent = recall(&case.expected_agents, &actual.agents()).expect("validated case").value();
    let expected: Vec<StepSig> =
        case.expected_steps.iter().map(|s| StepSig::new(&s.agent_id, &s.required_tools)).collect();
    let plan = acc_plan(&expected, &actual.steps).expect("validated case").value();
    let (key, val) = match acc_params(&case.expected_calls(), &actual.tool_calls()) {
        Ok(p) => (p.key.value(), p.val.value()),
        // argument-free calls are correct exactly when they were made
        Err(MetricError::NoExpectedParams) | Err(MetricError::EmptyExpected) => {
            let r = recall(&case.expected_tools, &tools).expect("validated case").value();
            (r, r)
        }
    };
    Scores { tool, agent, plan, key, val, combined: combined(plan, agent, tool, key, val) }
}

/// Run-level adherence from the union of step discrepancy flags.
pub fn run_adherence(trace: &SessionTrace) -> Adherence {
    let (mut r, mut a, mut p) = (false, false, false);
    for d in trace.step_results().filter_map(|s| s.deviation.as_ref()) {
        let (dr, da, dp) = d.flags();
        r |= dr;
        a |= da;
        p |= dp;
    }
    classify(r, a, p)
}

/// Planner and specialist backends.
pub type BackendPair = (Arc<dyn Backend>, Arc<dyn Backend>);

/// Supplies the planner and specialist backends for one run.
pub trait BackendFactory: Send + Sync {
    fn backends(&self, case: &TestCase, mode: Mode, pair: TierPair) -> Result<BackendPair, String>;
}

/// Scripted backends replaying each case's ground truth, with optional
/// per-case faults.
#[derive(Debug, Clone, Default)]
pub struct GoldenFactory {
    faults: HashMap<String, Fault>,
}

impl GoldenFactory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fault(mut self, test_id: impl Into<String>, fault: Fault) -> Self {
        self.faults.insert(test_id.into(), fault);
        self
    }
}

impl BackendFactory for GoldenFactory {
    fn backends(&self, case: &TestCase, mode: Mode, pair: TierPair) -> Result<BackendPair, String> {
        let o = pair.orchestrator;
        let s = pair.specialist;
        Ok(golden_backends(
            case,
            mode,
            self.faults.get(&case.test_id),
            (o.label(), o.pricing()),
            (s.label(), s.pricing()),
        ))
    }
}

/// Backends looked up by tier label (`S`, `M`, `L`, `XL`, `API`) in a registry.
#[derive(Debug, Clone)]
pub struct RegistryFactory {
    registry: BackendRegistry,
}

impl RegistryFactory {
    pub fn new(registry: BackendRegistry) -> Self {
        Self { registry }
    }
}

impl BackendFactory for RegistryFactory {
    fn backends(&self, _: &TestCase, _: Mode, pair: TierPair) -> Result<BackendPair, String> {
        let build = |t: Tier| self.registry.build(t.label()).map_err(|e| e.to_string());
        Ok((build(pair.orchestrator)?, build(pair.specialist)?))
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub pair: TierPair,
    pub tool_metric: ToolMetric,
    pub cards: Option<Vec<AgentCard>>,
    pub prompts: Option<PromptSet>,
    pub parallel_steps: bool,
    /// Directory for the session trace and any files tools write.
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(mode: Mode, pair: TierPair) -> Self {
        Self {
            mode,
            pair,
            tool_metric: ToolMetric::Recall,
            cards: None,
            prompts: None,
            parallel_steps: false,
            out_dir: None,
        }
    }

    pub fn run_key(&self, case: &TestCase) -> String {
        format!("{}_{}_{}", case.test_id, self.mode, self.pair)
    }
}

fn panic_text(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panic".into())
}

/// Runs the full pipeline on a fresh runtime. Panics and backend
/// construction errors give a zero record instead of propagating.
pub fn run_case(case: &TestCase, cfg: &RunConfig, factory: &dyn BackendFactory) -> RunRecord {
    let outcome = catch_unwind(AssertUnwindSafe(|| run_inner(case, cfg, factory)));
    match outcome {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => RunRecord::zero(case, cfg.mode, cfg.pair, cfg.tool_metric, e),
        Err(p) => RunRecord::zero(case, cfg.mode, cfg.pair, cfg.tool_metric, format!("crashed: {}", panic_text(p))),
    }
}

fn run_inner(case: &TestCase, cfg: &RunConfig, factory: &dyn BackendFactory) -> Result<RunRecord, String> {
    let (planner, specialist) = factory.backends(case, cfg.mode, cfg.pair)?;
    let run_dir = cfg.out_dir.as_ref().map(|d| d.join("runs").join(cfg.run_key(case)));
    let mut runtime = Runtime::new();
    if let Some(d) = &run_dir {
        std::fs::create_dir_all(d).map_err(|e| format!("{}: {e}", d.display()))?;
        runtime = runtime.with_results_dir(d);
    }
    let (rt, registry) = shared_registry(runtime);
    let bus = Arc::new(ToolBus::new(registry));
    let cards = cfg.cards.clone().unwrap_or_else(default_cards);
    let mut orch = Orchestrator::over_bus(bus, cards, planner, specialist)
        .map_err(|e| e.to_string())?
        .with_options(OrchestratorOptions { mode: cfg.mode, parallel: cfg.parallel_steps, ..Default::default() })
        .with_context(move || rt.lock().map(|r| r.context_summary()).unwrap_or_default());
    if let Some(p) = &cfg.prompts {
        orch = orch.with_prompts(p.clone());
    }
    let trace = orch.handle(&case.request);
    let trace_path = match &run_dir {
        Some(d) => {
            let p = d.join("trace.json");
            trace.save(&p).map_err(|e| format!("{}: {e}", p.display()))?;
            Some(p.display().to_string())
        }
        None => None,
    };
    Ok(record_from(case, cfg, &trace, trace_path))
}

/// Scores a finished session.
pub fn record_from(case: &TestCase, cfg: &RunConfig, trace: &SessionTrace, trace_path: Option<String>) -> RunRecord {
    let actual = ActualTrace::from_session(trace);
    let s = score(case, &actual, cfg.tool_metric);
    let totals = trace.totals();
    let span = |p: &Option<bemas_orchestrator::PhaseSpan>| p.as_ref().map(|p| p.duration_s()).unwrap_or(0.0);
    let failure = trace.first_failure().and_then(|r| r.error.clone()).map(|e| format!("step failed: {e}"));
    let skipped = trace.steps.iter().any(|s| matches!(s, StepOutcome::Skipped { .. }));
    RunRecord {
        test_id: case.test_id.clone(),
        category: case.category,
        mode: cfg.mode,
        orchestrator_tier: cfg.pair.orchestrator,
        specialist_tier: cfg.pair.specialist,
        acc_tool: s.tool,
        acc_agent: s.agent,
        acc_plan: s.plan,
        acc_key: s.key,
        acc_val: s.val,
        acc_combined: s.combined,
        tool_metric: cfg.tool_metric,
        total_time_s: trace.total_time_s(),
        planning_time_s: span(&trace.phases.planning),
        execution_time_s: span(&trace.phases.execution),
        synthesis_time_s: span(&trace.phases.synthesis),
        orchestrator_tokens: totals.orchestrator_tokens,
        agent_tokens: totals.agent_tokens,
        total_tokens: totals.total_tokens,
        orchestrator_cost: totals.orchestrator_cost,
        agent_cost: totals.agent_cost,
        total_cost: totals.total_cost,
        llm_calls: totals.calls,
        adherence: cfg.mode.is_centralized().then(|| run_adherence(trace)),
        error: trace.error.clone().or(failure).or_else(|| skipped.then(|| "steps skipped".to_string())),
        crashed: false,
        trace: trace_path,
    }
}
