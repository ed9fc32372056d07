use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::spec::{InvalidSpec, ToolSpec};
use crate::validate::{validate_args, ValidationError};
use crate::JsonMap;

pub type HandlerError = Box<dyn std::error::Error + Send + Sync>;

/// Successful handler output; becomes the `data`/`message` of the envelope.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolOutput {
    pub data: JsonMap,
    pub message: String,
}

impl ToolOutput {
    pub fn new(data: JsonMap, message: impl Into<String>) -> Self {
        Self { data, message: message.into() }
    }
}

/// Executes a tool against already-validated arguments.
pub trait ToolHandler: Send + Sync {
    fn call(&self, args: &JsonMap) -> Result<ToolOutput, HandlerError>;
}

impl<F> ToolHandler for F
where
    F: Fn(&JsonMap) -> Result<ToolOutput, HandlerError> + Send + Sync,
{
    fn call(&self, args: &JsonMap) -> Result<ToolOutput, HandlerError> {
        self(args)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ToolId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ListDetail {
    NamesOnly,
    Full,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("tool '{0}' is already registered")]
    DuplicateName(String),
    #[error(transparent)]
    InvalidSpec(#[from] InvalidSpec),
}

struct Entry {
    spec: ToolSpec,
    handler: Arc<dyn ToolHandler>,
}

/// Registration-ordered tool table.
#[derive(Default)]
pub struct ToolRegistry {
    entries: Vec<Entry>,
    by_name: HashMap<String, usize>,
}

impl std::fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToolRegistry").field("tools", &self.entries.len()).finish()
    }
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, spec: ToolSpec, handler: impl ToolHandler + 'static) -> Result<ToolId, RegistryError> {
        spec.validate()?;
        if self.by_name.contains_key(&spec.name) {
            return Err(RegistryError::DuplicateName(spec.name));
        }
        let id = self.entries.len();
        self.by_name.insert(spec.name.clone(), id);
        self.entries.push(Entry { spec, handler: Arc::new(handler) });
        Ok(ToolId(id))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn list(&self, detail: ListDetail) -> Vec<ToolSpec> {
        self.entries
            .iter()
            .map(|e| match detail {
                ListDetail::NamesOnly => e.spec.stripped(),
                ListDetail::Full => e.spec.clone(),
            })
            .collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.spec.name.as_str())
    }

    pub fn describe(&self, name: &str) -> Option<&ToolSpec> {
        self.by_name.get(name).map(|&i| &self.entries[i].spec)
    }

    pub fn validate_args(&self, name: &str, args: &JsonMap) -> Result<JsonMap, ValidationError> {
        let spec = self.describe(name).ok_or_else(|| ValidationError::UnknownTool(name.to_string()))?;
        validate_args(spec, args).map_err(ValidationError::Violations)
    }

    pub(crate) fn handler(&self, name: &str) -> Option<Arc<dyn ToolHandler>> {
        self.by_name.get(name).map(|&i| Arc::clone(&self.entries[i].handler))
    }
}
