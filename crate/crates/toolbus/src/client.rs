use std::sync::Arc;

use thiserror::Error;

use crate::bus::{ExecutedCall, ToolBus};
use crate::registry::ListDetail;
use crate::spec::ToolSpec;
use crate::JsonMap;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport unavailable: {0}")]
    TransportUnavailable(#[from] std::io::Error),
    #[error("protocol error {code}: {message}")]
    Protocol { code: i64, message: String },
    #[error("unknown tool: {0}")]
    UnknownTool(String),
    #[error("could not decode response: {0}")]
    Decode(String),
}

/// The agent-facing view of the tool bus, local or remote.
pub trait ToolClient: Send + Sync {
    fn list_tools(&self, detail: ListDetail) -> Result<Vec<ToolSpec>, ClientError>;
    fn describe_tool(&self, name: &str) -> Result<ToolSpec, ClientError>;
    fn invoke(&self, caller: &str, tool: &str, arguments: JsonMap) -> Result<ExecutedCall, ClientError>;
}

/// In-process client over a shared bus.
#[derive(Debug, Clone)]
pub struct LocalClient {
    bus: Arc<ToolBus>,
}

impl LocalClient {
    pub fn new(bus: Arc<ToolBus>) -> Self {
        Self { bus }
    }

    pub fn bus(&self) -> &Arc<ToolBus> {
        &self.bus
    }
}

impl ToolClient for LocalClient {
    fn list_tools(&self, detail: ListDetail) -> Result<Vec<ToolSpec>, ClientError> {
        Ok(self.bus.list_tools(detail))
    }

    fn describe_tool(&self, name: &str) -> Result<ToolSpec, ClientError> {
        self.bus.describe(name).ok_or_else(|| ClientError::UnknownTool(name.to_string()))
    }

    fn invoke(&self, caller: &str, tool: &str, arguments: JsonMap) -> Result<ExecutedCall, ClientError> {
        Ok(self.bus.invoke(caller, tool, arguments))
    }
}
