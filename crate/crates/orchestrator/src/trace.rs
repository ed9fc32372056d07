use std::path::Path;

use bemas_llm::{UsageRecord, UsageTotals};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::agent::{StepResult, StepStatus};
use crate::hr::HrRecord;
use crate::plan::{ExecutionPlan, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpan {
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
}

impl PhaseSpan {
    pub fn new(started_at: DateTime<Utc>, ended_at: DateTime<Utc>) -> Self {
        Self { started_at, ended_at: ended_at.max(started_at) }
    }

    pub fn duration_s(&self) -> f64 {
        (self.ended_at - self.started_at).num_microseconds().map(|us| us as f64 / 1e6).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Phases {
    pub planning: Option<PhaseSpan>,
    pub execution: Option<PhaseSpan>,
    pub synthesis: Option<PhaseSpan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum StepOutcome {
    Completed(StepResult),
    Skipped { step_id: String, agent_id: String, reason: String },
}

impl StepOutcome {
    pub fn step_id(&self) -> &str {
        match self {
            StepOutcome::Completed(r) => &r.step_id,
            StepOutcome::Skipped { step_id, .. } => step_id,
        }
    }

    pub fn agent_id(&self) -> &str {
        match self {
            StepOutcome::Completed(r) => &r.agent_id,
            StepOutcome::Skipped { agent_id, .. } => agent_id,
        }
    }

    pub fn result(&self) -> Option<&StepResult> {
        match self {
            StepOutcome::Completed(r) => Some(r),
            StepOutcome::Skipped { .. } => None,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.result().is_some_and(|r| r.status == StepStatus::Success)
    }
}

/// Everything that happened while serving one request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub session_id: String,
    pub request: String,
    pub mode: Mode,
    pub routed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concierge_reply: Option<String>,
    #[serde(default)]
    pub context: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hr: Option<HrRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage1_plan: Option<ExecutionPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<ExecutionPlan>,
    /// Dispatch order.
    pub steps: Vec<StepOutcome>,
    pub usage: Vec<UsageRecord>,
    pub phases: Phases,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
}

impl SessionTrace {
    pub(crate) fn new(session_id: String, request: &str, mode: Mode) -> Self {
        let now = Utc::now();
        Self {
            session_id,
            request: request.to_string(),
            mode,
            routed: false,
            concierge_reply: None,
            context: String::new(),
            hr: None,
            stage1_plan: None,
            plan: None,
            steps: Vec::new(),
            usage: Vec::new(),
            phases: Phases::default(),
            answer: String::new(),
            error: None,
            started_at: now,
            ended_at: now,
        }
    }

    pub fn totals(&self) -> UsageTotals {
        UsageTotals::from_records(&self.usage)
    }

    pub fn total_time_s(&self) -> f64 {
        PhaseSpan::new(self.started_at, self.ended_at).duration_s()
    }

    pub fn step_results(&self) -> impl Iterator<Item = &StepResult> {
        self.steps.iter().filter_map(StepOutcome::result)
    }

    /// First step in dispatch order that ran and did not succeed.
    pub fn first_failure(&self) -> Option<&StepResult> {
        self.step_results().find(|r| r.status != StepStatus::Success)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_json())
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}
