use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::error::LlmError;
use crate::http::HttpChatBackend;
use crate::scripted::{Script, ScriptedBackend};

/// Dollars per one million tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Pricing {
    pub input_per_m: f64,
    pub output_per_m: f64,
}

impl Pricing {
    pub const FREE: Pricing = Pricing { input_per_m: 0.0, output_per_m: 0.0 };

    pub fn new(input_per_m: f64, output_per_m: f64) -> Self {
        Self { input_per_m, output_per_m }
    }

    pub fn cost(&self, prompt_tokens: u64, completion_tokens: u64) -> f64 {
        prompt_tokens as f64 * self.input_per_m / 1e6 + completion_tokens as f64 * self.output_per_m / 1e6
    }

    pub fn is_free(&self) -> bool {
        self.input_per_m == 0.0 && self.output_per_m == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat,
    Scripted,
}

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub backend_id: String,
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model_name: String,
    #[serde(default)]
    pub pricing: Pricing,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_path: Option<PathBuf>,
}

impl BackendSpec {
    pub fn scripted(backend_id: impl Into<String>, pricing: Pricing) -> Self {
        Self {
            backend_id: backend_id.into(),
            kind: BackendKind::Scripted,
            endpoint: None,
            model_name: String::new(),
            pricing,
            timeout_s: default_timeout(),
            max_retries: 0,
            api_key_env: None,
            script_path: None,
        }
    }

    pub fn http(backend_id: impl Into<String>, endpoint: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            backend_id: backend_id.into(),
            kind: BackendKind::HttpChat,
            endpoint: Some(endpoint.into()),
            model_name: model_name.into(),
            pricing: Pricing::FREE,
            timeout_s: default_timeout(),
            max_retries: default_retries(),
            api_key_env: None,
            script_path: None,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |msg: String| Err(LlmError::InvalidSpec(format!("{}: {msg}", self.backend_id)));
        if self.backend_id.trim().is_empty() {
            return Err(LlmError::InvalidSpec("backend_id must not be empty".into()));
        }
        let p = self.pricing;
        if !(p.input_per_m >= 0.0 && p.output_per_m >= 0.0) || !p.input_per_m.is_finite() || !p.output_per_m.is_finite()
        {
            return bad("pricing must be finite and non-negative".into());
        }
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return bad(format!("timeout_s must be positive, got {}", self.timeout_s));
        }
        if self.kind == BackendKind::HttpChat {
            match self.endpoint.as_deref() {
                Some(e) if e.starts_with("http://") || e.starts_with("https://") => {}
                Some(e) => return bad(format!("endpoint '{e}' is not an http(s) URL")),
                None => return bad("http_chat backend needs an endpoint".into()),
            }
        }
        Ok(())
    }

    /// Instantiates the backend. Scripted specs load `script_path`.
    pub fn build(&self) -> Result<Arc<dyn Backend>, LlmError> {
        self.validate()?;
        match self.kind {
            BackendKind::HttpChat => Ok(Arc::new(HttpChatBackend::new(self.clone())?)),
            BackendKind::Scripted => {
                let path = self.script_path.as_ref().ok_or_else(|| {
                    LlmError::InvalidSpec(format!("{}: scripted backend needs script_path", self.backend_id))
                })?;
                self.build_scripted(Script::load(path)?)
            }
        }
    }

    /// Scripted backend with this spec's id and pricing, whatever its kind.
    pub fn build_scripted(&self, script: Script) -> Result<Arc<dyn Backend>, LlmError> {
        Ok(Arc::new(ScriptedBackend::new(self.backend_id.clone(), script, self.pricing)?))
    }
}

/// Backend specs keyed by id, loaded from a JSON list.
#[derive(Debug, Clone, Default)]
pub struct BackendRegistry {
    specs: BTreeMap<String, BackendSpec>,
}

impl BackendRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_specs(specs: impl IntoIterator<Item = BackendSpec>) -> Result<Self, LlmError> {
        let mut reg = Self::new();
        for s in specs {
            reg.insert(s)?;
        }
        Ok(reg)
    }

    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let specs: Vec<BackendSpec> = serde_json::from_str(text).map_err(|e| LlmError::InvalidSpec(e.to_string()))?;
        Self::from_specs(specs)
    }

    /// Loads a registry file. Relative script paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| LlmError::InvalidSpec(format!("{}: {e}", path.display())))?;
        let mut reg = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            for spec in reg.specs.values_mut() {
                if let Some(p) = spec.script_path.as_mut() {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            }
        }
        Ok(reg)
    }

    pub fn insert(&mut self, spec: BackendSpec) -> Result<(), LlmError> {
        spec.validate()?;
        if self.specs.contains_key(&spec.backend_id) {
            return Err(LlmError::InvalidSpec(format!("duplicate backend_id '{}'", spec.backend_id)));
        }
        self.specs.insert(spec.backend_id.clone(), spec);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&BackendSpec, LlmError> {
        self.specs.get(id).ok_or_else(|| LlmError::UnknownBackend(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.specs.keys().map(String::as_str)
    }

    pub fn specs(&self) -> impl Iterator<Item = &BackendSpec> {
        self.specs.values()
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn build(&self, id: &str) -> Result<Arc<dyn Backend>, LlmError> {
        self.get(id)?.build()
    }
}
