//! Tool bus: the registry of runtime tools, strict argument validation, and
//! the request/response protocol that agents use to reach the runtime.
//!
//! Tools are registered once with a [`ToolSpec`] and a handler. Every
//! invocation goes through [`ToolBus::invoke`], which authorizes the caller,
//! validates arguments, runs the handler and records the call in the session
//! trace. The same surface is reachable out of process through JSON-RPC 2.0
//! (`tools/list`, `tools/describe`, `tools/call`) over newline-delimited stdio
//! or length-prefixed TCP frames.

mod bus;
mod client;
mod envelope;
mod registry;
pub mod rpc;
mod spec;
pub mod transport;
mod validate;

pub use bus::{AccessPolicy, ExecutedCall, ToolBus, ToolCall};
pub use client::{ClientError, LocalClient, ToolClient};
pub use envelope::ToolResult;
pub use registry::{HandlerError, ListDetail, RegistryError, ToolHandler, ToolId, ToolOutput, ToolRegistry};
pub use spec::{InvalidSpec, ParamKind, ParamSpec, ToolCategory, ToolSpec};
pub use validate::{validate_args, ValidationError, Violation};

/// JSON object type used for tool arguments and result payloads.
pub type JsonMap = serde_json::Map<String, serde_json::Value>;
