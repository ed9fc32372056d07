use serde::{Deserialize, Serialize};

use crate::JsonMap;

/// Uniform tool response: `{success, data, message}` on success and
/// `{success, error}` on failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<JsonMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ToolResult {
    pub fn ok(data: JsonMap, message: impl Into<String>) -> Self {
        Self { success: true, data: Some(data), message: Some(message.into()), error: None }
    }

    pub fn failure(error: impl Into<String>) -> Self {
        Self { success: false, data: None, message: None, error: Some(error.into()) }
    }

    /// True when the success/error/data combination is consistent.
    pub fn is_well_formed(&self) -> bool {
        if self.success {
            self.error.is_none()
        } else {
            self.error.is_some() && self.data.is_none()
        }
    }
}
