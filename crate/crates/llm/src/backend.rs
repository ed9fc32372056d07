use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::LlmError;
use crate::registry::Pricing;
use crate::usage::{RoleTag, UsageLedger, UsageRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: "assistant".into(), content: content.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl Default for CompletionParams {
    fn default() -> Self {
        Self { temperature: 0.3, max_tokens: None }
    }
}

/// Backend reply before metering.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCompletion {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

pub trait Backend: Send + Sync {
    fn backend_id(&self) -> &str;
    fn pricing(&self) -> Pricing;
    fn raw_complete(&self, messages: &[Message], params: &CompletionParams) -> Result<RawCompletion, LlmError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub usage: UsageRecord,
}

/// Calls `backend` once and prices the reported usage.
pub fn complete(
    backend: &dyn Backend,
    messages: &[Message],
    params: &CompletionParams,
    role: RoleTag,
) -> Result<Completion, LlmError> {
    let start = Instant::now();
    let raw = backend.raw_complete(messages, params)?;
    let usage = UsageRecord {
        backend_id: backend.backend_id().to_string(),
        role_tag: role,
        purpose: String::new(),
        prompt_tokens: raw.prompt_tokens,
        completion_tokens: raw.completion_tokens,
        wall_time_s: start.elapsed().as_secs_f64(),
        cost: backend.pricing().cost(raw.prompt_tokens, raw.completion_tokens),
    };
    Ok(Completion { text: raw.text, usage })
}

/// A backend bound to a role and a ledger; every successful call is recorded.
#[derive(Clone)]
pub struct MeteredLlm {
    backend: Arc<dyn Backend>,
    role: RoleTag,
    ledger: UsageLedger,
    params: CompletionParams,
}

impl std::fmt::Debug for MeteredLlm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeteredLlm")
            .field("backend", &self.backend.backend_id())
            .field("role", &self.role)
            .finish_non_exhaustive()
    }
}

impl MeteredLlm {
    pub fn new(backend: Arc<dyn Backend>, role: RoleTag, ledger: UsageLedger) -> Self {
        Self { backend, role, ledger, params: CompletionParams::default() }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.params.temperature = temperature;
        self
    }

    pub fn backend_id(&self) -> &str {
        self.backend.backend_id()
    }

    pub fn role(&self) -> RoleTag {
        self.role
    }

    pub fn ledger(&self) -> &UsageLedger {
        &self.ledger
    }

    /// Single-prompt call recorded under `purpose`.
    pub fn ask(&self, purpose: &str, prompt: &str) -> Result<String, LlmError> {
        self.chat(purpose, &[Message::user(prompt)])
    }

    pub fn chat(&self, purpose: &str, messages: &[Message]) -> Result<String, LlmError> {
        let mut c = complete(self.backend.as_ref(), messages, &self.params, self.role)?;
        c.usage.purpose = purpose.to_string();
        self.ledger.push(c.usage);
        Ok(c.text)
    }
}
