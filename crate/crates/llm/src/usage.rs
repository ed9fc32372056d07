use std::fmt;
use std::sync::{Arc, Mutex, PoisonError};

use serde::{Deserialize, Serialize};

/// Which side of the system issued an LLM call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleTag {
    Orchestrator,
    Agent,
}

impl fmt::Display for RoleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoleTag::Orchestrator => "orchestrator",
            RoleTag::Agent => "agent",
        })
    }
}

/// Metered outcome of one completion call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageRecord {
    pub backend_id: String,
    pub role_tag: RoleTag,
    /// Free-form label of the call site, e.g. `planning` or `synthesis`.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub purpose: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub wall_time_s: f64,
    pub cost: f64,
}

impl UsageRecord {
    pub fn total_tokens(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

/// Token and cost sums split by role.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageTotals {
    pub orchestrator_tokens: u64,
    pub agent_tokens: u64,
    pub total_tokens: u64,
    pub orchestrator_cost: f64,
    pub agent_cost: f64,
    pub total_cost: f64,
    pub calls: usize,
}

impl UsageTotals {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a UsageRecord>) -> Self {
        let mut t = UsageTotals::default();
        for r in records {
            t.calls += 1;
            match r.role_tag {
                RoleTag::Orchestrator => {
                    t.orchestrator_tokens += r.total_tokens();
                    t.orchestrator_cost += r.cost;
                }
                RoleTag::Agent => {
                    t.agent_tokens += r.total_tokens();
                    t.agent_cost += r.cost;
                }
            }
        }
        t.total_tokens = t.orchestrator_tokens + t.agent_tokens;
        t.total_cost = t.orchestrator_cost + t.agent_cost;
        t
    }
}

/// Append-only, shareable list of usage records for one session.
#[derive(Debug, Clone, Default)]
pub struct UsageLedger {
    inner: Arc<Mutex<Vec<UsageRecord>>>,
}

impl UsageLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, record: UsageRecord) {
        self.inner.lock().unwrap_or_else(PoisonError::into_inner).push(record);
    }

    pub fn records(&self) -> Vec<UsageRecord> {
        self.inner.lock().unwrap_or_else(PoisonError::into_inner).clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap_or_else(PoisonError::into_inner).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn totals(&self) -> UsageTotals {
        UsageTotals::from_records(&self.records())
    }
}
