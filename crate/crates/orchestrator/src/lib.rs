//! Specialist agents and the orchestrator that plans and dispatches their work.
//!
//! A request flows concierge → planner → dispatcher → specialists → final
//! report. Agents are described by YAML cards and may only call the tools
//! their card lists. Three planning modes exist: one-pass centralized (C1),
//! two-stage centralized (C2) and decentralized (D). Every LLM call lands in a
//! usage ledger tagged orchestrator or agent, and each request produces a
//! [`SessionTrace`].

mod agent;
mod card;
mod catalog;
mod deviation;
mod error;
mod hr;
mod json;
mod orchestrator;
mod plan;
mod pool;
mod prompts;
mod trace;
pub mod values;

pub use agent::{Specialist, SpecialistPlan, SpecialistResponse, StepResult, StepStatus};
pub use card::{default_cards, load_agent_card, load_cards_dir, AgentCard, DEFAULT_TEMPERATURE};
pub use catalog::ToolCatalog;
pub use deviation::{classify, diff_calls, Adherence, Deviation, DeviationType};
pub use error::{CardError, HrError, PlanError};
pub use hr::{HrAssessment, HrRecord, Modification, ModificationAction};
pub use json::extract_json;
pub use orchestrator::{Orchestrator, OrchestratorOptions, Routing, ROUTE_MARKER};
pub use plan::{
    parse_plan, validate_plan, validate_stage1, ExecutionPlan, InvalidPlan, Mode, OrchestratorGuidance, PlanStep,
    PlanViolation, ToolInstruction,
};
pub use pool::AgentPool;
pub use prompts::{render, PromptSet, Template};
pub use trace::{PhaseSpan, Phases, SessionTrace, StepOutcome};

pub type JsonMap = serde_json::Map<String, serde_json::Value>;
