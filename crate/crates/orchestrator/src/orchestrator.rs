use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use bemas_llm::{Backend, LlmError, Message, MeteredLlm, RoleTag, UsageLedger};
use bemas_toolbus::{LocalClient, ToolBus, ToolClient};
use chrono::Utc;
use serde_json::json;

use crate::agent::{ask_structured, AskError, Specialist, StepResult, StepStatus};
use crate::card::AgentCard;
use crate::catalog::ToolCatalog;
use crate::error::{CardError, HrError, PlanError};
use crate::hr::{resolve, HrAssessment, HrRecord, ModificationAction};
use crate::json::decode;
use crate::plan::{
    enforce_mode_fields, parse_plan, topo_order, validate_plan, validate_stage1, ExecutionPlan, InvalidPlan, Mode,
    PlanViolation,
};
use crate::pool::AgentPool;
use crate::prompts::{PromptSet, Template};
use crate::trace::{PhaseSpan, SessionTrace, StepOutcome};

/// The concierge hands a request to the planner iff its reply contains this.
pub const ROUTE_MARKER: &str = "ACTION: ROUTE_TO_ORCHESTRATOR";

#[derive(Debug, Clone, PartialEq)]
pub enum Routing {
    SmallTalk(String),
    Route { acknowledgement: String, request: String },
}

#[derive(Debug, Clone)]
pub struct OrchestratorOptions {
    pub mode: Mode,
    /// Run dependency-independent steps concurrently.
    pub parallel: bool,
    /// Review the agent pool before planning.
    pub hr_enabled: bool,
    /// Where revised and created cards are written.
    pub cards_dir: Option<PathBuf>,
}

impl Default for OrchestratorOptions {
    fn default() -> Self {
        Self { mode: Mode::C2, parallel: false, hr_enabled: false, cards_dir: None }
    }
}

type ContextFn = Arc<dyn Fn() -> String + Send + Sync>;

pub struct Orchestrator {
    pool: AgentPool,
    catalog: ToolCatalog,
    client: Arc<dyn ToolClient>,
    bus: Option<Arc<ToolBus>>,
    prompts: PromptSet,
    orchestrator_backend: Arc<dyn Backend>,
    specialist_backend: Arc<dyn Backend>,
    ledger: UsageLedger,
    options: OrchestratorOptions,
    context_fn: Option<ContextFn>,
    last_answer: Option<String>,
    sessions: u64,
}

impl std::fmt::Debug for Orchestrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Orchestrator")
            .field("agents", &self.pool.len())
            .field("tools", &self.catalog.len())
            .field("options", &self.options)
            .finish_non_exhaustive()
    }
}

fn truncate(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        let mut t: String = s.chars().take(n).collect();
        t.push_str("...");
        t
    }
}

impl Orchestrator {
    pub fn new(
        pool: AgentPool,
        catalog: ToolCatalog,
        client: Arc<dyn ToolClient>,
        orchestrator_backend: Arc<dyn Backend>,
        specialist_backend: Arc<dyn Backend>,
    ) -> Self {
        Self {
            pool,
            catalog,
            client,
            bus: None,
            prompts: PromptSet::default(),
            orchestrator_backend,
            specialist_backend,
            ledger: UsageLedger::new(),
            options: OrchestratorOptions::default(),
            context_fn: None,
            last_answer: None,
            sessions: 0,
        }
    }

    /// Builds the catalog and pool from an in-process bus and enforces every
    /// card's whitelist on that bus.
    pub fn over_bus(
        bus: Arc<ToolBus>,
        cards: Vec<AgentCard>,
        orchestrator_backend: Arc<dyn Backend>,
        specialist_backend: Arc<dyn Backend>,
    ) -> Result<Self, CardError> {
        let client = LocalClient::new(bus.clone());
        let catalog = ToolCatalog::from_client(&client).expect("local listing cannot fail");
        let pool = AgentPool::instantiate(cards, &catalog)?;
        let mut o = Self::new(pool, catalog, Arc::new(client), orchestrator_backend, specialist_backend);
        o.bus = Some(bus);
        o.grant_all();
        Ok(o)
    }

    fn grant_all(&self) {
        if let Some(bus) = &self.bus {
            for c in self.pool.cards() {
                bus.grant(&c.agent_id, c.available_tools.iter().cloned());
            }
        }
    }

    pub fn with_prompts(mut self, prompts: PromptSet) -> Self {
        self.prompts = prompts;
        self
    }

    pub fn with_options(mut self, options: OrchestratorOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.options.mode = mode;
        self
    }

    /// Supplies the base of the planning context, e.g. the active configuration.
    pub fn with_context(mut self, f: impl Fn() -> String + Send + Sync + 'static) -> Self {
        self.context_fn = Some(Arc::new(f));
        self
    }

    pub fn pool(&self) -> &AgentPool {
        &self.pool
    }

    pub fn catalog(&self) -> &ToolCatalog {
        &self.catalog
    }

    pub fn prompts(&self) -> &PromptSet {
        &self.prompts
    }

    pub fn options(&self) -> &OrchestratorOptions {
        &self.options
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.options.mode = mode;
    }

    pub fn ledger(&self) -> &UsageLedger {
        &self.ledger
    }

    fn llm(&self) -> MeteredLlm {
        MeteredLlm::new(self.orchestrator_backend.clone(), RoleTag::Orchestrator, self.ledger.clone())
    }

    /// Active configuration plus a summary of the previous turn.
    pub fn context(&self) -> String {
        let base = self.context_fn.as_ref().map(|f| f()).unwrap_or_else(|| "no additional context".into());
        match &self.last_answer {
            Some(prev) => format!("{base}\nPrevious turn: {}", truncate(prev, 300)),
            None => base,
        }
    }

    pub fn concierge_route(&self, message: &str) -> Result<Routing, LlmError> {
        let system = self.prompts.render(Template::Concierge, &[("agent_info", &self.pool.role_summary())]);
        let reply = self.llm().chat("routing", &[Message::system(system), Message::user(message)])?;
        if reply.contains(ROUTE_MARKER) {
            let acknowledgement = reply.replace(ROUTE_MARKER, "").trim().to_string();
            Ok(Routing::Route { acknowledgement, request: message.to_string() })
        } else {
            Ok(Routing::SmallTalk(reply))
        }
    }

    pub fn render_c1_prompt(&self, request: &str, context: &str) -> String {
        self.prompts.render(
            Template::PlanC1,
            &[("user_request", request), ("context", context), ("agent_info", &self.pool.full_summary(&self.catalog))],
        )
    }

    pub fn render_c2_stage1_prompt(&self, request: &str, context: &str) -> String {
        self.prompts.render(
            Template::PlanC2Stage1,
            &[("user_request", request), ("context", context), ("basic_agent_info", &self.pool.minimal_summary())],
        )
    }

    /// Stage-2 prompt carrying schemas only for tools the outline selected.
    pub fn render_c2_stage2_prompt(&self, request: &str, outline: &ExecutionPlan) -> String {
        let mut selected: Vec<&str> = Vec::new();
        for s in &outline.steps {
            for t in s.tools_to_use.iter().flatten() {
                if !selected.contains(&t.as_str()) {
                    selected.push(t);
                }
            }
        }
        let steps: Vec<_> = outline
            .steps
            .iter()
            .map(|s| {
                json!({
                    "step_id": s.step_id,
                    "agent_id": s.agent_id,
                    "task": s.task,
                    "depends_on": s.depends_on,
                    "selected_tools": s.tools_to_use.clone().unwrap_or_default(),
                })
            })
            .collect();
        let steps = serde_json::to_string_pretty(&steps).expect("serializable");
        self.prompts.render(
            Template::PlanC2Stage2,
            &[
                ("user_request", request),
                ("stage1_steps", &steps),
                ("detailed_tool_info", &self.catalog.schema_blocks(selected)),
            ],
        )
    }

    pub fn render_d_prompt(&self, request: &str, context: &str) -> String {
        self.prompts.render(
            Template::PlanD,
            &[("user_request", request), ("context", context), ("agent_info", &self.pool.role_summary())],
        )
    }

    fn ask_plan(&self, purpose: &str, prompt: &str, mode: Mode) -> Result<ExecutionPlan, PlanError> {
        let mut calls = 0;
        ask_structured(&self.llm(), purpose, prompt, &self.prompts, &mut calls, |t| parse_plan(t, mode)).map_err(|e| {
            match e {
                AskError::Backend(b) => PlanError::Backend(b),
                AskError::Malformed { attempts, detail } => PlanError::Malformed { attempts, detail },
            }
        })
    }

    fn finalize(&self, mut plan: ExecutionPlan) -> Result<ExecutionPlan, PlanError> {
        enforce_mode_fields(&mut plan);
        validate_plan(&plan, &self.pool, &self.catalog)?;
        Ok(plan)
    }

    pub fn plan_c1(&self, request: &str, context: &str) -> Result<ExecutionPlan, PlanError> {
        if self.pool.is_empty() {
            return Err(PlanError::EmptyPool);
        }
        let plan = self.ask_plan("planning", &self.render_c1_prompt(request, context), Mode::C1)?;
        self.finalize(plan)
    }

    /// Returns the validated outline and the merged final plan.
    pub fn plan_c2(&self, request: &str, context: &str) -> Result<(ExecutionPlan, ExecutionPlan), PlanError> {
        if self.pool.is_empty() {
            return Err(PlanError::EmptyPool);
        }
        let outline = self.ask_plan("planning_stage1", &self.render_c2_stage1_prompt(request, context), Mode::C2)?;
        validate_stage1(&outline, &self.pool, &self.catalog)?;
        let detailed = self.ask_plan("planning_stage2", &self.render_c2_stage2_prompt(request, &outline), Mode::C2)?;
        let mut guidance: HashMap<String, _> =
            detailed.steps.into_iter().filter_map(|s| s.guidance.map(|g| (s.step_id, g))).collect();
        let mut merged = outline.clone();
        let mut missing = Vec::new();
        for s in &mut merged.steps {
            match guidance.remove(&s.step_id) {
                Some(g) => s.guidance = Some(g),
                None => missing.push(PlanViolation::MissingGuidance(s.step_id.clone())),
            }
        }
        if !missing.is_empty() {
            return Err(InvalidPlan(missing).into());
        }
        Ok((outline, self.finalize(merged)?))
    }

    pub fn plan_d(&self, request: &str, context: &str) -> Result<ExecutionPlan, PlanError> {
        if self.pool.is_empty() {
            return Err(PlanError::EmptyPool);
        }
        let plan = self.ask_plan("planning", &self.render_d_prompt(request, context), Mode::D)?;
        self.finalize(plan)
    }

    /// Plans under the configured mode. The outline is returned for C2.
    pub fn plan(&self, request: &str, context: &str) -> Result<(ExecutionPlan, Option<ExecutionPlan>), PlanError> {
        match self.options.mode {
            Mode::C1 => self.plan_c1(request, context).map(|p| (p, None)),
            Mode::C2 => self.plan_c2(request, context).map(|(o, p)| (p, Some(o))),
            Mode::D => self.plan_d(request, context).map(|p| (p, None)),
        }
    }

    fn run_step(&self, plan: &ExecutionPlan, index: usize) -> StepResult {
        let step = &plan.steps[index];
        let card = self.pool.card(&step.agent_id).expect("validated plan names pooled agents");
        let agent = Specialist::new(
            card,
            self.specialist_backend.clone(),
            self.ledger.clone(),
            self.client.as_ref(),
            &self.catalog,
            &self.prompts,
        );
        match (&step.guidance, plan.mode) {
            (Some(g), Mode::C1 | Mode::C2) => {
                agent.execute_centralized(&step.step_id, &step.task, &g.tool_instructions)
            }
            (_, Mode::D) => {
                let task = match &step.expected_outcome {
                    Some(o) if !o.is_empty() => format!("{}\nExpected outcome: {o}", step.task),
                    _ => step.task.clone(),
                };
                agent.execute_decentralized(&step.step_id, &task)
            }
            (None, _) => agent.execute_centralized(&step.step_id, &step.task, &[]),
        }
    }

    fn blocker(&self, plan: &ExecutionPlan, index: usize, done: &HashMap<String, StepOutcome>) -> Option<String> {
        plan.steps[index].depends_on.iter().find_map(|d| match done.get(d) {
            Some(o) if o.succeeded() => None,
            Some(StepOutcome::Skipped { .. }) => Some(format!("dependency {d} skipped")),
            _ => Some(format!("dependency {d} failed")),
        })
    }

    fn skipped(plan: &ExecutionPlan, index: usize, reason: String) -> StepOutcome {
        let s = &plan.steps[index];
        StepOutcome::Skipped { step_id: s.step_id.clone(), agent_id: s.agent_id.clone(), reason }
    }

    /// Runs the plan in dependency order. A step whose dependency did not
    /// succeed is skipped. Failures are captured, never raised.
    pub fn dispatch(&self, plan: &ExecutionPlan) -> Vec<StepOutcome> {
        let order = topo_order(plan);
        let mut done: HashMap<String, StepOutcome> = HashMap::new();
        let mut out = Vec::with_capacity(order.len());
        if !self.options.parallel {
            for i in order {
                let outcome = match self.blocker(plan, i, &done) {
                    Some(reason) => Self::skipped(plan, i, reason),
                    None => StepOutcome::Completed(self.run_step(plan, i)),
                };
                done.insert(plan.steps[i].step_id.clone(), outcome.clone());
                out.push(outcome);
            }
            return out;
        }
        let mut remaining = order;
        while !remaining.is_empty() {
            let (wave, rest): (Vec<usize>, Vec<usize>) =
                remaining.iter().partition(|&&i| plan.steps[i].depends_on.iter().all(|d| done.contains_key(d)));
            remaining = rest;
            let results: Vec<StepOutcome> = std::thread::scope(|scope| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|&i| match self.blocker(plan, i, &done) {
                        Some(reason) => Err(Box::new(Self::skipped(plan, i, reason))),
                        None => Ok(scope.spawn(move || StepOutcome::Completed(self.run_step(plan, i)))),
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| match h {
                        Ok(h) => h.join().expect("step thread panicked"),
                        Err(skip) => *skip,
                    })
                    .collect()
            });
            for r in results {
                done.insert(r.step_id().to_string(), r.clone());
                out.push(r);
            }
        }
        out
    }

    fn failure_answer(steps: &[StepOutcome]) -> String {
        let first = steps.iter().find_map(|s| s.result().filter(|r| r.status != StepStatus::Success));
        match first {
            Some(r) => format!(
                "The request could not be completed: step {} ({}) failed: {}",
                r.step_id,
                r.agent_id,
                r.error.as_deref().unwrap_or("no detail")
            ),
            None => "The request could not be completed: no step ran.".into(),
        }
    }

    /// One formatter call over the step reports. A trace in which nothing
    /// succeeded gets a fixed failure answer naming the first failing step.
    pub fn synthesize(&self, request: &str, steps: &[StepOutcome]) -> Result<String, LlmError> {
        if !steps.iter().any(StepOutcome::succeeded) {
            return Ok(Self::failure_answer(steps));
        }
        let mut result = String::new();
        for s in steps {
            match s {
                StepOutcome::Completed(r) => {
                    let status = serde_json::to_value(r.status).expect("serializable");
                    result.push_str(&format!(
                        "{} [{}] {}\n{}\n",
                        r.step_id,
                        r.agent_id,
                        status.as_str().unwrap_or_default(),
                        r.synthesis.trim()
                    ));
                    if let Some(e) = &r.error {
                        result.push_str(&format!("error: {e}\n"));
                    }
                }
                StepOutcome::Skipped { step_id, agent_id, reason } => {
                    result.push_str(&format!("{step_id} [{agent_id}] skipped: {reason}\n"));
                }
            }
            result.push('\n');
        }
        let prompt = self.prompts.render(Template::Format, &[("request", request), ("result", result.trim_end())]);
        self.llm().ask("synthesis", &prompt)
    }

    /// Turns an error into a user-facing reply through the formatter.
    pub fn clarify(&self, request: &str, error: &str) -> String {
        let result = format!("error: {error}");
        let prompt = self.prompts.render(Template::Format, &[("request", request), ("result", &result)]);
        self.llm().ask("synthesis", &prompt).unwrap_or_else(|e| {
            log::warn!("clarification failed: {e}");
            format!("Sorry, that did not work ({error}). Please rephrase the request or try again.")
        })
    }

    pub fn render_hr_prompt(&self, request: &str, context: &str) -> String {
        let all: Vec<_> = self.catalog.names().collect();
        let unused = self.pool.unassigned_tools(&self.catalog);
        let unused = if unused.is_empty() { "none".to_string() } else { unused.join(", ") };
        self.prompts.render(
            Template::PoolReview,
            &[
                ("user_request", request),
                ("context", context),
                ("agent_capabilities", &self.pool.capability_summary()),
                ("all_server_tools", &all.join(", ")),
                ("unused_tools", &unused),
            ],
        )
    }

    pub fn hr_assess(&self, request: &str, context: &str) -> Result<HrAssessment, HrError> {
        let mut calls = 0;
        ask_structured(&self.llm(), "hr", &self.render_hr_prompt(request, context), &self.prompts, &mut calls, decode)
            .map_err(|e| match e {
                AskError::Backend(b) => HrError::Backend(b),
                AskError::Malformed { attempts, detail } => HrError::Malformed { attempts, detail },
            })
    }

    /// Applies every modification or none. Changed cards are written to the
    /// cards directory when one is configured. Returns the touched agent ids.
    pub fn hr_apply(&mut self, mods: &[crate::hr::Modification]) -> Result<Vec<String>, HrError> {
        let resolved = resolve(&self.pool, &self.catalog, mods)?;
        if let Some(dir) = &self.options.cards_dir {
            for (_, card) in &resolved {
                card.save(dir).map_err(|e| HrError::Persist(e.to_string()))?;
            }
        }
        let mut touched = Vec::new();
        for (action, card) in resolved {
            touched.push(card.agent_id.clone());
            match action {
                ModificationAction::Create => {
                    self.pool.insert(card, &self.catalog).map_err(|e| HrError::InvalidModification(e.to_string()))?
                }
                ModificationAction::Revise => self.pool.replace(card),
            }
        }
        self.grant_all();
        Ok(touched)
    }

    fn review_pool(&mut self, request: &str, context: &str) -> HrRecord {
        let mut record = HrRecord::default();
        match self.hr_assess(request, context) {
            Ok(a) => {
                if !a.can_handle {
                    match self.hr_apply(&a.modifications) {
                        Ok(ids) => record.applied = ids,
                        Err(e) => record.error = Some(e.to_string()),
                    }
                } else if !a.modifications.is_empty() {
                    log::warn!("pool review said can_handle but proposed changes; ignoring them");
                }
                record.assessment = Some(a);
            }
            Err(e) => record.error = Some(e.to_string()),
        }
        record
    }

    /// Runs the full pipeline for one user message.
    pub fn handle(&mut self, message: &str) -> SessionTrace {
        self.sessions += 1;
        let session_id = format!("session_{:03}", self.sessions);
        let mark = self.ledger.len();
        let mut trace = SessionTrace::new(session_id, message, self.options.mode);
        self.serve(message, &mut trace);
        trace.usage = self.ledger.records().split_off(mark);
        trace.ended_at = Utc::now().max(trace.started_at);
        self.last_answer = Some(trace.answer.clone());
        trace
    }

    fn serve(&mut self, message: &str, trace: &mut SessionTrace) {
        let request = match self.concierge_route(message) {
            Ok(Routing::SmallTalk(reply)) => {
                trace.concierge_reply = Some(reply.clone());
                trace.answer = reply;
                return;
            }
            Ok(Routing::Route { acknowledgement, request }) => {
                trace.routed = true;
                trace.concierge_reply = Some(acknowledgement);
                request
            }
            Err(e) => {
                trace.error = Some(format!("routing: {e}"));
                trace.answer = format!("Sorry, the assistant is unavailable right now ({e}). Please try again.");
                return;
            }
        };
        let context = self.context();
        trace.context = context.clone();

        let plan_start = Utc::now();
        if self.options.hr_enabled {
            trace.hr = Some(self.review_pool(&request, &context));
        }
        let planned = self.plan(&request, &context);
        trace.phases.planning = Some(PhaseSpan::new(plan_start, Utc::now()));
        let plan = match planned {
            Ok((plan, outline)) => {
                trace.stage1_plan = outline;
                plan
            }
            Err(e) => {
                let msg = format!("planning: {e}");
                let synth_start = Utc::now();
                trace.answer = self.clarify(&request, &msg);
                trace.phases.synthesis = Some(PhaseSpan::new(synth_start, Utc::now()));
                trace.error = Some(msg);
                return;
            }
        };

        let exec_start = Utc::now();
        trace.steps = self.dispatch(&plan);
        trace.phases.execution = Some(PhaseSpan::new(exec_start, Utc::now()));
        trace.plan = Some(plan);

        let synth_start = Utc::now();
        match self.synthesize(&request, &trace.steps) {
            Ok(answer) => trace.answer = answer,
            Err(e) => {
                trace.error = Some(format!("synthesis: {e}"));
                trace.answer = Self::failure_answer(&trace.steps);
                if trace.steps.iter().all(StepOutcome::succeeded) {
                    trace.answer = format!("All steps finished but the summary could not be written ({e}).");
                }
            }
        }
        trace.phases.synthesis = Some(PhaseSpan::new(synth_start, Utc::now()));
    }
}
