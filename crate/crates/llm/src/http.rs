use std::time::Duration;

use log::{debug, warn};
use serde::Deserialize;
use serde_json::json;

use crate::backend::{Backend, CompletionParams, Message, RawCompletion};
use crate::error::LlmError;
use crate::registry::{BackendSpec, Pricing};
use crate::scripted::whitespace_tokens;

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct ChatUsage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

enum Attempt {
    Retry(LlmError),
    Fatal(LlmError),
}

/// Client for an OpenAI-compatible `/chat/completions` endpoint.
pub struct HttpChatBackend {
    spec: BackendSpec,
    url: String,
    agent: ureq::Agent,
    backoff: Duration,
}

impl std::fmt::Debug for HttpChatBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpChatBackend").field("id", &self.spec.backend_id).field("url", &self.url).finish()
    }
}

impl HttpChatBackend {
    pub fn new(spec: BackendSpec) -> Result<Self, LlmError> {
        spec.validate()?;
        let endpoint = spec
            .endpoint
            .as_deref()
            .ok_or_else(|| LlmError::InvalidSpec(format!("{}: missing endpoint", spec.backend_id)))?;
        let url = format!("{}/chat/completions", endpoint.trim_end_matches('/'));
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(spec.timeout_s)))
            .http_status_as_error(false)
            .build();
        Ok(Self { spec, url, agent: config.into(), backoff: Duration::from_millis(250) })
    }

    /// Base delay before the first retry; doubles on each further attempt.
    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn api_key(&self) -> Result<Option<String>, LlmError> {
        match &self.spec.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var).map(Some).map_err(|_| LlmError::AuthFailure {
                backend: self.spec.backend_id.clone(),
                detail: format!("environment variable {var} is not set"),
            }),
        }
    }

    fn attempt(&self, body: &serde_json::Value, key: Option<&str>) -> Result<RawCompletion, Attempt> {
        let id = &self.spec.backend_id;
        let unavailable = |detail: String| LlmError::BackendUnavailable { backend: id.clone(), detail };
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(k) = key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = match req.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => {
                return Err(Attempt::Retry(LlmError::BackendTimeout { backend: id.clone(), attempts: 1 }))
            }
            Err(e) => return Err(Attempt::Retry(unavailable(e.to_string()))),
        };
        let status = resp.status().as_u16();
        if status == 401 || status == 403 {
            let detail = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(Attempt::Fatal(LlmError::AuthFailure {
                backend: id.clone(),
                detail: format!("HTTP {status}: {}", detail.trim()),
            }));
        }
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(unavailable(format!("HTTP {status}"))));
        }
        if !(200..300).contains(&status) {
            let detail = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(Attempt::Fatal(unavailable(format!("HTTP {status}: {}", detail.trim()))));
        }
        let parsed: ChatResponse = match resp.body_mut().read_json() {
            Ok(p) => p,
            Err(ureq::Error::Timeout(_)) => {
                return Err(Attempt::Retry(LlmError::BackendTimeout { backend: id.clone(), attempts: 1 }))
            }
            Err(e) => return Err(Attempt::Fatal(unavailable(format!("malformed response: {e}")))),
        };
        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Attempt::Fatal(unavailable("response has no choices[0].message.content".into())))?;
        let (prompt_tokens, completion_tokens) = match parsed.usage {
            Some(u) => (u.prompt_tokens, u.completion_tokens),
            None => {
                warn!("backend {id} returned no usage block; falling back to whitespace counts");
                let prompt = body["messages"]
                    .as_array()
                    .map(|ms| ms.iter().filter_map(|m| m["content"].as_str()).map(whitespace_tokens).sum())
                    .unwrap_or(0);
                (prompt, whitespace_tokens(&text))
            }
        };
        Ok(RawCompletion { text, prompt_tokens, completion_tokens })
    }
}

impl Backend for HttpChatBackend {
    fn backend_id(&self) -> &str {
        &self.spec.backend_id
    }

    fn pricing(&self) -> Pricing {
        self.spec.pricing
    }

    fn raw_complete(&self, messages: &[Message], params: &CompletionParams) -> Result<RawCompletion, LlmError> {
        let key = self.api_key()?;
        let mut body = json!({
            "model": self.spec.model_name,
            "messages": messages,
            "temperature": params.temperature,
        });
        if let Some(m) = params.max_tokens {
            body["max_tokens"] = json!(m);
        }
        let attempts = self.spec.max_retries + 1;
        let mut last = None;
        for n in 0..attempts {
            if n > 0 {
                let delay = self.backoff * 2u32.saturating_pow(n - 1);
                debug!("backend {} retry {n}/{} after {delay:?}", self.spec.backend_id, self.spec.max_retries);
                std::thread::sleep(delay);
            }
            match self.attempt(&body, key.as_deref()) {
                Ok(c) => return Ok(c),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) => last = Some(e),
            }
        }
        Err(match last {
            Some(LlmError::BackendTimeout { backend, .. }) => LlmError::BackendTimeout { backend, attempts },
            Some(e) => e,
            None => unreachable!("at least one attempt is made"),
        })
    }
}
