use bemas_llm::LlmError;
use thiserror::Error;

use crate::plan::InvalidPlan;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CardError {
    #[error("card is not valid YAML: {0}")]
    Parse(String),
    #[error("card schema error: {0}")]
    Schema(String),
    #[error("agent '{agent}' lists unknown tool '{tool}'")]
    UnknownToolInCard { agent: String, tool: String },
    #[error("duplicate agent_id '{0}'")]
    DuplicateAgentId(String),
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("agent pool is empty")]
    EmptyPool,
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error("malformed LLM output after {attempts} attempt(s): {detail}")]
    Malformed { attempts: u32, detail: String },
    #[error(transparent)]
    Invalid(#[from] InvalidPlan),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HrError {
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error("malformed LLM output after {attempts} attempt(s): {detail}")]
    Malformed { attempts: u32, detail: String },
    #[error("invalid modification: {0}")]
    InvalidModification(String),
    #[error("could not persist card: {0}")]
    Persist(String),
}
