use std::path::Path;
use std::sync::{Mutex, PoisonError};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, CompletionParams, Message, RawCompletion};
use crate::error::LlmError;
use crate::registry::Pricing;

/// Characters of the prompt quoted in a [`LlmError::ScriptMiss`].
pub const PROMPT_HEAD_CHARS: usize = 80;

/// Deterministic token count: number of whitespace-separated words.
pub fn whitespace_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Conditions a rule places on a call. Every condition given must hold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Matcher {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substring: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regex: Option<String>,
    /// 1-based position of the call on this backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call_index: Option<u64>,
}

impl Matcher {
    pub fn substring(s: impl Into<String>) -> Self {
        Self { substring: Some(s.into()), ..Self::default() }
    }

    pub fn regex(s: impl Into<String>) -> Self {
        Self { regex: Some(s.into()), ..Self::default() }
    }

    pub fn call_index(i: u64) -> Self {
        Self { call_index: Some(i), ..Self::default() }
    }
}

/// Failure a rule can inject instead of a text reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    Timeout,
    Unavailable,
    Auth,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    Text(String),
    /// Returns the content of the last message unchanged.
    Echo,
    Fail(Fault),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRule", into = "RawRule")]
pub struct Rule {
    pub matcher: Matcher,
    pub reply: Reply,
}

impl Rule {
    pub fn text(matcher: Matcher, text: impl Into<String>) -> Self {
        Self { matcher, reply: Reply::Text(text.into()) }
    }

    pub fn fault(matcher: Matcher, fault: Fault) -> Self {
        Self { matcher, reply: Reply::Fail(fault) }
    }

    pub fn echo(matcher: Matcher) -> Self {
        Self { matcher, reply: Reply::Echo }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    #[serde(rename = "match")]
    matcher: Matcher,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<Fault>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    echo: bool,
}

impl TryFrom<RawRule> for Rule {
    type Error = String;

    fn try_from(r: RawRule) -> Result<Self, String> {
        let reply = match (r.response, r.error, r.echo) {
            (Some(t), None, false) => Reply::Text(t),
            (None, Some(f), false) => Reply::Fail(f),
            (None, None, true) => Reply::Echo,
            (None, None, false) => return Err("rule needs one of response, error or echo".into()),
            _ => return Err("rule may have only one of response, error or echo".into()),
        };
        Ok(Rule { matcher: r.matcher, reply })
    }
}

impl From<Rule> for RawRule {
    fn from(r: Rule) -> Self {
        let (response, error, echo) = match r.reply {
            Reply::Text(t) => (Some(t), None, false),
            Reply::Echo => (None, None, true),
            Reply::Fail(f) => (None, Some(f), false),
        };
        RawRule { matcher: r.matcher, response, error, echo }
    }
}

/// Ordered rule list. Serialized either as a bare array or as `{"rules": [...]}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "ScriptRepr")]
pub struct Script {
    pub rules: Vec<Rule>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptRepr {
    Bare(Vec<Rule>),
    Wrapped { rules: Vec<Rule> },
}

impl From<ScriptRepr> for Script {
    fn from(r: ScriptRepr) -> Self {
        match r {
            ScriptRepr::Bare(rules) | ScriptRepr::Wrapped { rules } => Script { rules },
        }
    }
}

impl Script {
    pub fn new(rules: Vec<Rule>) -> Self {
        Self { rules }
    }

    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        serde_json::from_str(text).map_err(|e| LlmError::InvalidScript(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| LlmError::InvalidScript(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

struct CompiledRule {
    substring: Option<String>,
    regex: Option<Regex>,
    call_index: Option<u64>,
    reply: Reply,
}

impl CompiledRule {
    fn matches(&self, prompt: &str, index: u64) -> bool {
        self.call_index.is_none_or(|i| i == index)
            && self.substring.as_deref().is_none_or(|s| prompt.contains(s))
            && self.regex.as_ref().is_none_or(|r| r.is_match(prompt))
    }
}

/// Backend answering from a fixed script; never improvises.
pub struct ScriptedBackend {
    id: String,
    pricing: Pricing,
    rules: Vec<CompiledRule>,
    calls: Mutex<u64>,
}

impl std::fmt::Debug for ScriptedBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScriptedBackend")
            .field("id", &self.id)
            .field("rules", &self.rules.len())
            .field("calls", &self.calls_made())
            .finish()
    }
}

impl ScriptedBackend {
    pub fn new(id: impl Into<String>, script: Script, pricing: Pricing) -> Result<Self, LlmError> {
        let mut rules = Vec::with_capacity(script.rules.len());
        for (n, rule) in script.rules.into_iter().enumerate() {
            let m = rule.matcher;
            if m.substring.is_none() && m.regex.is_none() && m.call_index.is_none() {
                return Err(LlmError::InvalidScript(format!("rule {} has an empty match", n + 1)));
            }
            if m.call_index == Some(0) {
                return Err(LlmError::InvalidScript(format!("rule {}: call_index is 1-based", n + 1)));
            }
            let regex = match m.regex {
                Some(p) => Some(Regex::new(&p).map_err(|e| LlmError::InvalidScript(format!("rule {}: {e}", n + 1)))?),
                None => None,
            };
            rules.push(CompiledRule { substring: m.substring, regex, call_index: m.call_index, reply: rule.reply });
        }
        Ok(Self { id: id.into(), pricing, rules, calls: Mutex::new(0) })
    }

    /// Number of calls answered or rejected so far.
    pub fn calls_made(&self) -> u64 {
        *self.calls.lock().unwrap_or_else(PoisonError::into_inner)
    }

    fn prompt_text(messages: &[Message]) -> String {
        messages.iter().map(|m| m.content.as_str()).collect::<Vec<_>>().join("\n")
    }
}

impl Backend for ScriptedBackend {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn pricing(&self) -> Pricing {
        self.pricing
    }

    fn raw_complete(&self, messages: &[Message], _params: &CompletionParams) -> Result<RawCompletion, LlmError> {
        let prompt = Self::prompt_text(messages);
        let index = {
            let mut calls = self.calls.lock().unwrap_or_else(PoisonError::into_inner);
            *calls += 1;
            *calls
        };
        let Some(rule) = self.rules.iter().find(|r| r.matches(&prompt, index)) else {
            return Err(LlmError::ScriptMiss { head: prompt.chars().take(PROMPT_HEAD_CHARS).collect() });
        };
        let text = match &rule.reply {
            Reply::Text(text) => text.clone(),
            Reply::Echo => messages.last().map(|m| m.content.clone()).unwrap_or_default(),
            Reply::Fail(fault) => return Err(self.fault(*fault, index)),
        };
        Ok(RawCompletion {
            prompt_tokens: whitespace_tokens(&prompt),
            completion_tokens: whitespace_tokens(&text),
            text,
        })
    }
}

impl ScriptedBackend {
    fn fault(&self, fault: Fault, index: u64) -> LlmError {
        match fault {
            Fault::Timeout => LlmError::BackendTimeout { backend: self.id.clone(), attempts: 1 },
            Fault::Unavailable => LlmError::BackendUnavailable {
                backend: self.id.clone(),
                detail: format!("scripted fault on call {index}"),
            },
            Fault::Auth => {
                LlmError::AuthFailure { backend: self.id.clone(), detail: format!("scripted fault on call {index}") }
            }
        }
    }
}
