use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::envelope::ToolResult;
use crate::registry::{ListDetail, ToolRegistry};
use crate::spec::ToolSpec;
use crate::validate::ValidationError;
use crate::JsonMap;

/// One tool invocation as issued by a caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub call_id: String,
    pub caller: String,
    pub tool: String,
    pub arguments: JsonMap,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
}

impl ToolCall {
    pub fn duration_s(&self) -> f64 {
        (self.ended_at - self.started_at).num_microseconds().map(|us| us as f64 / 1e6).unwrap_or(0.0)
    }
}

/// A call paired with the envelope it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutedCall {
    pub call: ToolCall,
    pub result: ToolResult,
}

/// Which callers may reach which tools.
#[derive(Debug, Clone, Default)]
pub enum AccessPolicy {
    /// Any caller may invoke any registered tool.
    #[default]
    Open,
    /// Callers may only invoke tools granted to them; unknown callers get nothing.
    Whitelist(HashMap<String, BTreeSet<String>>),
}

impl AccessPolicy {
    fn allows(&self, caller: &str, tool: &str) -> bool {
        match self {
            AccessPolicy::Open => true,
            AccessPolicy::Whitelist(map) => map.get(caller).is_some_and(|t| t.contains(tool)),
        }
    }
}

#[derive(Default)]
struct Session {
    counter: u64,
    calls: Vec<ExecutedCall>,
}

/// Registry plus access control plus the session trace.
///
/// The registry is fixed once the bus is built. `invoke` may be called from
/// any number of threads; trace appends are serialized.
pub struct ToolBus {
    registry: ToolRegistry,
    access: RwLock<AccessPolicy>,
    session: Mutex<Session>,
}

impl std::fmt::Debug for ToolBus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToolBus").field("registry", &self.registry).finish_non_exhaustive()
    }
}

impl ToolBus {
    pub fn new(registry: ToolRegistry) -> Self {
        Self::with_policy(registry, AccessPolicy::Open)
    }

    pub fn with_policy(registry: ToolRegistry, policy: AccessPolicy) -> Self {
        Self { registry, access: RwLock::new(policy), session: Mutex::new(Session::default()) }
    }

    pub fn registry(&self) -> &ToolRegistry {
        &self.registry
    }

    pub fn list_tools(&self, detail: ListDetail) -> Vec<ToolSpec> {
        self.registry.list(detail)
    }

    pub fn describe(&self, name: &str) -> Option<ToolSpec> {
        self.registry.describe(name).cloned()
    }

    /// Adds tools to a caller's whitelist. Switches an open bus to whitelist mode.
    pub fn grant<I, S>(&self, caller: &str, tools: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut access = self.access.write().unwrap_or_else(|e| e.into_inner());
        if let AccessPolicy::Open = *access {
            *access = AccessPolicy::Whitelist(HashMap::new());
        }
        if let AccessPolicy::Whitelist(map) = &mut *access {
            map.entry(caller.to_string()).or_default().extend(tools.into_iter().map(Into::into));
        }
    }

    pub fn is_authorized(&self, caller: &str, tool: &str) -> bool {
        self.access.read().unwrap_or_else(|e| e.into_inner()).allows(caller, tool)
    }

    fn next_call_id(&self, caller: &str) -> String {
        let mut s = self.session.lock().unwrap_or_else(|e| e.into_inner());
        s.counter += 1;
        format!("{caller}-{:04}", s.counter)
    }

    /// Runs one tool call. Always returns an envelope; failures of any kind
    /// (unknown tool, access, validation, handler error or panic) become
    /// `{success: false, error}`.
    pub fn invoke(&self, caller: &str, tool: &str, arguments: JsonMap) -> ExecutedCall {
        let started_at = Utc::now();
        let call_id = self.next_call_id(caller);
        let result = self.execute(caller, tool, &arguments);
        let call = ToolCall {
            call_id,
            caller: caller.to_string(),
            tool: tool.to_string(),
            arguments,
            started_at,
            ended_at: Utc::now().max(started_at),
        };
        let executed = ExecutedCall { call, result };
        self.session.lock().unwrap_or_else(|e| e.into_inner()).calls.push(executed.clone());
        executed
    }

    fn execute(&self, caller: &str, tool: &str, arguments: &JsonMap) -> ToolResult {
        let Some(handler) = self.registry.handler(tool) else {
            return ToolResult::failure(ValidationError::UnknownTool(tool.to_string()).to_string());
        };
        if !self.is_authorized(caller, tool) {
            return ToolResult::failure(format!("unauthorized: caller '{caller}' may not call '{tool}'"));
        }
        let args = match self.registry.validate_args(tool, arguments) {
            Ok(a) => a,
            Err(e) => return ToolResult::failure(e.to_string()),
        };
        match catch_unwind(AssertUnwindSafe(|| handler.call(&args))) {
            Ok(Ok(out)) => ToolResult::ok(out.data, out.message),
            Ok(Err(e)) => ToolResult::failure(e.to_string()),
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| panic.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "unknown panic".to_string());
                log::error!("tool '{tool}' panicked: {msg}");
                ToolResult::failure(format!("tool '{tool}' panicked: {msg}"))
            }
        }
    }

    /// Snapshot of every call made on this bus so far, in completion order.
    pub fn trace(&self) -> Vec<ExecutedCall> {
        self.session.lock().unwrap_or_else(|e| e.into_inner()).calls.clone()
    }

    pub fn take_trace(&self) -> Vec<ExecutedCall> {
        std::mem::take(&mut self.session.lock().unwrap_or_else(|e| e.into_inner()).calls)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::{HandlerError, ToolOutput};
    use crate::spec::{ParamKind, ParamSpec, ToolCategory};
    use serde_json::json;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn obj(v: serde_json::Value) -> JsonMap {
        v.as_object().unwrap().clone()
    }

    fn bus_with_counter() -> (ToolBus, Arc<AtomicUsize>) {
        let hits = Arc::new(AtomicUsize::new(0));
        let h = Arc::clone(&hits);
        let mut reg = ToolRegistry::new();
        reg.register(
            ToolSpec::new("hvac_add", ToolCategory::Hvac, "Add")
                .param(ParamSpec::required("system_id", ParamKind::String, ""))
                .param(ParamSpec::required("cluster_id", ParamKind::String, "")),
            move |args: &JsonMap| -> Result<ToolOutput, HandlerError> {
                h.fetch_add(1, Ordering::SeqCst);
                Ok(ToolOutput::new(args.clone(), "added"))
            },
        )
        .unwrap();
        reg.register(
            ToolSpec::new("explode", ToolCategory::Hvac, "fails"),
            |_: &JsonMap| -> Result<ToolOutput, HandlerError> { Err("coil melted".into()) },
        )
        .unwrap();
        reg.register(
            ToolSpec::new("panics", ToolCategory::Hvac, "panics"),
            |_: &JsonMap| -> Result<ToolOutput, HandlerError> { panic!("bad state") },
        )
        .unwrap();
        (ToolBus::new(reg), hits)
    }

    #[test]
    fn validation_precedes_execution() {
        let (bus, hits) = bus_with_counter();
        let r = bus.invoke("a", "hvac_add", obj(json!({"system_id": "fcu1"})));
        assert!(!r.result.success);
        assert_eq!(r.result.error.as_deref(), Some("validation failed: missing required cluster_id"));
        assert_eq!(hits.load(Ordering::SeqCst), 0);

        let r = bus.invoke("a", "hvac_add", obj(json!({"system_id": "fcu1", "cluster_id": "c1"})));
        assert!(r.result.success);
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn handler_errors_and_panics_become_envelopes() {
        let (bus, _) = bus_with_counter();
        let r = bus.invoke("a", "explode", JsonMap::new());
        assert_eq!(r.result, ToolResult::failure("coil melted"));
        let r = bus.invoke("a", "panics", JsonMap::new());
        assert!(!r.result.success);
        assert!(r.result.error.unwrap().contains("bad state"));
        let r = bus.invoke("a", "missing_tool", JsonMap::new());
        assert_eq!(r.result.error.as_deref(), Some("unknown tool: missing_tool"));
    }

    #[test]
    fn whitelist_denies_unlisted_callers() {
        let (bus, hits) = bus_with_counter();
        bus.grant("hvac_agent", ["hvac_add"]);
        let args = obj(json!({"system_id": "fcu1", "cluster_id": "c1"}));
        let denied = bus.invoke("der_agent", "hvac_add", args.clone());
        assert!(denied.result.error.unwrap().starts_with("unauthorized"));
        assert_eq!(hits.load(Ordering::SeqCst), 0);
        assert!(bus.invoke("hvac_agent", "hvac_add", args).result.success);
    }

    #[test]
    fn trace_records_every_invoke_with_ids() {
        let (bus, _) = bus_with_counter();
        bus.invoke("x", "explode", JsonMap::new());
        bus.invoke("y", "nope", JsonMap::new());
        bus.invoke("x", "hvac_add", obj(json!({"system_id": "a", "cluster_id": "b"})));
        let trace = bus.trace();
        let ids: Vec<_> = trace.iter().map(|c| c.call.call_id.as_str()).collect();
        assert_eq!(ids, ["x-0001", "y-0002", "x-0003"]);
        assert!(trace.iter().all(|c| c.call.ended_at >= c.call.started_at));
        assert!(trace.iter().all(|c| c.result.is_well_formed()));
    }

    #[test]
    fn concurrent_invokes_all_traced() {
        let (bus, hits) = bus_with_counter();
        let bus = Arc::new(bus);
        std::thread::scope(|s| {
            for t in 0..4 {
                let bus = Arc::clone(&bus);
                s.spawn(move || {
                    for i in 0..25 {
                        let args = obj(json!({"system_id": format!("s{t}_{i}"), "cluster_id": "c"}));
                        assert!(bus.invoke(&format!("agent{t}"), "hvac_add", args).result.success);
                    }
                });
            }
        });
        assert_eq!(hits.load(Ordering::SeqCst), 100);
        let trace = bus.trace();
        assert_eq!(trace.len(), 100);
        let ids: BTreeSet<_> = trace.iter().map(|c| c.call.call_id.clone()).collect();
        assert_eq!(ids.len(), 100);
    }
}
