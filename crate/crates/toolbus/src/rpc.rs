//! JSON-RPC 2.0 message types and the server-side method dispatcher.
//!
//! Methods:
//! - `tools/list` `{detail?: "names_only" | "full"}` → `{tools: [ToolSpec]}`
//! - `tools/describe` `{name}` → `{tool: ToolSpec}`
//! - `tools/call` `{name, arguments?, caller?}` → `{call: ToolCall, result: ToolResult}`

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bus::ToolBus;
use crate::registry::ListDetail;
use crate::JsonMap;

pub const PARSE_ERROR: i64 = -32700;
pub const INVALID_REQUEST: i64 = -32600;
pub const METHOD_NOT_FOUND: i64 = -32601;
pub const INVALID_PARAMS: i64 = -32602;
pub const UNKNOWN_TOOL: i64 = -32001;
pub const FRAME_TOO_LARGE: i64 = -32002;

/// Caller id used when a `tools/call` request does not name one.
pub const DEFAULT_CALLER: &str = "remote";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub jsonrpc: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<Value>,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Value>,
}

impl Request {
    pub fn new(id: u64, method: &str, params: Value) -> Self {
        Self { jsonrpc: "2.0".into(), id: Some(Value::from(id)), method: method.into(), params: Some(params) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpcError {
    pub code: i64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub jsonrpc: String,
    pub id: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RpcError>,
}

impl Response {
    fn ok(id: Value, result: Value) -> Self {
        Self { jsonrpc: "2.0".into(), id, result: Some(result), error: None }
    }

    pub fn error(id: Value, code: i64, message: impl Into<String>) -> Self {
        Self { jsonrpc: "2.0".into(), id, result: None, error: Some(RpcError { code, message: message.into() }) }
    }
}

/// Handles one raw frame. Returns `None` for notifications (no `id`).
pub fn handle_frame(bus: &ToolBus, frame: &[u8]) -> Option<Vec<u8>> {
    let response = match serde_json::from_slice::<Value>(frame) {
        Err(e) => Some(Response::error(Value::Null, PARSE_ERROR, format!("parse error: {e}"))),
        Ok(value) => handle_value(bus, value),
    };
    response.map(|r| serde_json::to_vec(&r).expect("response serializes"))
}

fn handle_value(bus: &ToolBus, value: Value) -> Option<Response> {
    let id = value.get("id").cloned();
    let request: Request = match serde_json::from_value(value) {
        Ok(r) => r,
        Err(e) => {
            return Some(Response::error(id.unwrap_or(Value::Null), INVALID_REQUEST, format!("invalid request: {e}")))
        }
    };
    if request.jsonrpc != "2.0" {
        return Some(Response::error(
            request.id.unwrap_or(Value::Null),
            INVALID_REQUEST,
            "invalid request: jsonrpc must be \"2.0\"",
        ));
    }
    let outcome = dispatch(bus, &request.method, request.params.unwrap_or(Value::Null));
    let id = request.id?;
    Some(match outcome {
        Ok(result) => Response::ok(id, result),
        Err((code, msg)) => Response::error(id, code, msg),
    })
}

fn params_object(params: Value) -> Result<JsonMap, (i64, String)> {
    match params {
        Value::Null => Ok(JsonMap::new()),
        Value::Object(m) => Ok(m),
        _ => Err((INVALID_PARAMS, "params must be an object".into())),
    }
}

fn dispatch(bus: &ToolBus, method: &str, params: Value) -> Result<Value, (i64, String)> {
    let params = params_object(params)?;
    match method {
        "tools/list" => {
            let detail = match params.get("detail").and_then(Value::as_str) {
                None | Some("full") => ListDetail::Full,
                Some("names_only") => ListDetail::NamesOnly,
                Some(other) => return Err((INVALID_PARAMS, format!("unknown detail level '{other}'"))),
            };
            Ok(json!({ "tools": bus.list_tools(detail) }))
        }
        "tools/describe" => {
            let name = params
                .get("name")
                .and_then(Value::as_str)
                .ok_or((INVALID_PARAMS, "missing string param 'name'".to_string()))?;
            let spec = bus.describe(name).ok_or((UNKNOWN_TOOL, format!("unknown tool: {name}")))?;
            Ok(json!({ "tool": spec }))
        }
        "tools/call" => {
            let name = params
                .get("name")
                .and_then(Value::as_str)
                .ok_or((INVALID_PARAMS, "missing string param 'name'".to_string()))?;
            let arguments = match params.get("arguments") {
                None | Some(Value::Null) => JsonMap::new(),
                Some(Value::Object(m)) => m.clone(),
                Some(_) => return Err((INVALID_PARAMS, "arguments must be an object".into())),
            };
            let caller = params.get("caller").and_then(Value::as_str).unwrap_or(DEFAULT_CALLER);
            let executed = bus.invoke(caller, name, arguments);
            Ok(serde_json::to_value(executed).expect("call serializes"))
        }
        other => Err((METHOD_NOT_FOUND, format!("method not found: {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::ToolRegistry;
    use crate::spec::{ToolCategory, ToolSpec};
    use crate::{HandlerError, ToolOutput};

    fn bus() -> ToolBus {
        let mut reg = ToolRegistry::new();
        reg.register(
            ToolSpec::new("config_list", ToolCategory::Configuration, "List"),
            |_: &JsonMap| -> Result<ToolOutput, HandlerError> { Ok(ToolOutput::default()) },
        )
        .unwrap();
        ToolBus::new(reg)
    }

    fn roundtrip(bus: &ToolBus, raw: &str) -> Response {
        serde_json::from_slice(&handle_frame(bus, raw.as_bytes()).unwrap()).unwrap()
    }

    #[test]
    fn parse_error_has_null_id() {
        let r = roundtrip(&bus(), "{not json");
        assert_eq!(r.id, Value::Null);
        assert_eq!(r.error.unwrap().code, PARSE_ERROR);
    }

    #[test]
    fn unknown_method() {
        let r = roundtrip(&bus(), r#"{"jsonrpc":"2.0","id":7,"method":"tools/frobnicate"}"#);
        assert_eq!(r.id, json!(7));
        assert_eq!(r.error.unwrap().code, METHOD_NOT_FOUND);
    }

    #[test]
    fn wrong_version_rejected() {
        let r = roundtrip(&bus(), r#"{"jsonrpc":"1.0","id":1,"method":"tools/list"}"#);
        assert_eq!(r.error.unwrap().code, INVALID_REQUEST);
    }

    #[test]
    fn notification_gets_no_response() {
        assert!(handle_frame(&bus(), br#"{"jsonrpc":"2.0","method":"tools/list"}"#).is_none());
    }

    #[test]
    fn describe_unknown_tool() {
        let r = roundtrip(&bus(), r#"{"jsonrpc":"2.0","id":"a","method":"tools/describe","params":{"name":"zzz"}}"#);
        assert_eq!(r.error.unwrap().code, UNKNOWN_TOOL);
    }

    #[test]
    fn call_returns_envelope() {
        let r = roundtrip(
            &bus(),
            r#"{"jsonrpc":"2.0","id":2,"method":"tools/call","params":{"name":"config_list","caller":"config_agent"}}"#,
        );
        let result = r.result.unwrap();
        assert_eq!(result["result"]["success"], json!(true));
        assert_eq!(result["call"]["caller"], json!("config_agent"));
    }
}
