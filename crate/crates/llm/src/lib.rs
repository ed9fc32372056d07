//! Completion backends with exact token and cost accounting.
//!
//! Two backend kinds exist: an OpenAI-compatible chat-completions client and
//! a scripted backend that answers from an ordered rule list. Every call made
//! through [`MeteredLlm`] lands in a shared [`UsageLedger`] tagged with the
//! role that issued it.

mod backend;
mod error;
mod http;
mod registry;
mod scripted;
mod usage;

pub use backend::{complete, Backend, Completion, CompletionParams, Message, MeteredLlm, RawCompletion};
pub use error::LlmError;
pub use http::HttpChatBackend;
pub use registry::{BackendKind, BackendRegistry, BackendSpec, Pricing};
pub use scripted::{whitespace_tokens, Fault, Matcher, Reply, Rule, Script, ScriptedBackend, PROMPT_HEAD_CHARS};
pub use usage::{RoleTag, UsageLedger, UsageRecord, UsageTotals};
