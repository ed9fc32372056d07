use std::sync::Arc;

use bemas_llm::{Backend, LlmError, MeteredLlm, RoleTag, UsageLedger};
use bemas_toolbus::{ExecutedCall, ToolCall, ToolClient, ToolResult};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::card::AgentCard;
use crate::catalog::ToolCatalog;
use crate::deviation::{diff_calls, Deviation};
use crate::json::decode;
use crate::plan::ToolInstruction;
use crate::prompts::{PromptSet, Template};
use crate::JsonMap;

/// Extra attempts after a reply that cannot be decoded.
pub(crate) const MALFORMED_RETRIES: u32 = 2;

pub(crate) enum AskError {
    Backend(LlmError),
    Malformed { attempts: u32, detail: String },
}

/// Asks for a JSON reply and decodes it with `parse`. On failure the error
/// is appended to the prompt and the call repeated, up to the retry budget.
pub(crate) fn ask_structured<T>(
    llm: &MeteredLlm,
    purpose: &str,
    prompt: &str,
    prompts: &PromptSet,
    calls: &mut u32,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<T, AskError> {
    let mut current = prompt.to_string();
    let mut attempts = 0;
    loop {
        attempts += 1;
        *calls += 1;
        let reply = llm.ask(purpose, &current).map_err(AskError::Backend)?;
        match parse(&reply) {
            Ok(v) => return Ok(v),
            Err(detail) if attempts > MALFORMED_RETRIES => return Err(AskError::Malformed { attempts, detail }),
            Err(detail) => {
                log::debug!("{purpose}: attempt {attempts} unusable: {detail}");
                current.push_str(&prompts.render(Template::Retry, &[("error", &detail)]));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validation {
    Valid,
    NeedsAdjustment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedInstruction {
    pub tool: String,
    #[serde(default)]
    pub parameters: JsonMap,
    #[serde(default)]
    pub reason: String,
}

/// Centralized-mode reply: a verdict on the planner's calls plus the calls to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialistResponse {
    pub validation: Validation,
    #[serde(default)]
    pub reasoning: String,
    pub refined_instructions: Vec<RefinedInstruction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedCall {
    pub tool: String,
    #[serde(default)]
    pub parameters: JsonMap,
    #[serde(default)]
    pub reasoning: String,
}

/// Decentralized-mode reply: the agent's own tool calls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialistPlan {
    #[serde(default)]
    pub reasoning: String,
    pub tool_calls: Vec<PlannedCall>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Success,
    Partial,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub step_id: String,
    pub agent_id: String,
    pub status: StepStatus,
    pub executed_calls: Vec<ExecutedCall>,
    pub synthesis: String,
    /// Centralized steps only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<Deviation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<Validation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub llm_calls: u32,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
}

impl StepResult {
    fn begin(step_id: &str, agent_id: &str) -> Self {
        let now = Utc::now();
        Self {
            step_id: step_id.to_string(),
            agent_id: agent_id.to_string(),
            status: StepStatus::Failed,
            executed_calls: Vec::new(),
            synthesis: String::new(),
            deviation: None,
            validation: None,
            error: None,
            llm_calls: 0,
            started_at: now,
            ended_at: now,
        }
    }

    fn fail(mut self, error: impl Into<String>) -> Self {
        self.status = StepStatus::Failed;
        self.error = Some(error.into());
        self.ended_at = Utc::now().max(self.started_at);
        self
    }

    fn finish(mut self) -> Self {
        let ok = self.executed_calls.iter().filter(|c| c.result.success).count();
        self.status = if ok == self.executed_calls.len() && ok > 0 {
            StepStatus::Success
        } else if ok > 0 {
            StepStatus::Partial
        } else {
            StepStatus::Failed
        };
        if self.status != StepStatus::Success && self.error.is_none() {
            let failed: Vec<_> = self
                .executed_calls
                .iter()
                .filter(|c| !c.result.success)
                .map(|c| format!("{}: {}", c.call.tool, c.result.error.as_deref().unwrap_or("failed")))
                .collect();
            self.error = Some(failed.join("; "));
        }
        self.ended_at = Utc::now().max(self.started_at);
        self
    }

    /// Tool names of every executed call, in order.
    pub fn tools(&self) -> Vec<&str> {
        self.executed_calls.iter().map(|c| c.call.tool.as_str()).collect()
    }
}

/// An agent card bound to a backend, the tool client and the prompt set.
/// Holds no state between steps.
pub struct Specialist<'a> {
    card: &'a AgentCard,
    llm: MeteredLlm,
    client: &'a dyn ToolClient,
    catalog: &'a ToolCatalog,
    prompts: &'a PromptSet,
}

impl<'a> Specialist<'a> {
    pub fn new(
        card: &'a AgentCard,
        backend: Arc<dyn Backend>,
        ledger: UsageLedger,
        client: &'a dyn ToolClient,
        catalog: &'a ToolCatalog,
        prompts: &'a PromptSet,
    ) -> Self {
        let llm = MeteredLlm::new(backend, RoleTag::Agent, ledger).with_temperature(card.temperature);
        Self { card, llm, client, catalog, prompts }
    }

    pub fn card(&self) -> &AgentCard {
        self.card
    }

    fn whitelist_check(&self, tool: &str) -> Result<(), String> {
        if self.card.allows(tool) {
            Ok(())
        } else {
            Err(format!("unauthorized: tool '{tool}' is not in {}'s available_tools", self.card.agent_id))
        }
    }

    fn tool_list(&self) -> String {
        self.card
            .available_tools
            .iter()
            .map(|t| match self.catalog.get(t) {
                Some(s) if !s.description.is_empty() => format!("- {t}: {}", s.description),
                _ => format!("- {t}"),
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn invoke(&self, tool: &str, parameters: JsonMap) -> ExecutedCall {
        match self.client.invoke(&self.card.agent_id, tool, parameters.clone()) {
            Ok(c) => c,
            Err(e) => {
                let now = Utc::now();
                ExecutedCall {
                    call: ToolCall {
                        call_id: format!("{}-unsent", self.card.agent_id),
                        caller: self.card.agent_id.clone(),
                        tool: tool.to_string(),
                        arguments: parameters,
                        started_at: now,
                        ended_at: now,
                    },
                    result: ToolResult::failure(e.to_string()),
                }
            }
        }
    }

    fn synthesize(&self, task: &str, result: &mut StepResult) -> Result<(), LlmError> {
        let results: Vec<_> = result
            .executed_calls
            .iter()
            .map(|c| json!({"tool": c.call.tool, "parameters": c.call.arguments, "result": c.result}))
            .collect();
        let results = serde_json::to_string_pretty(&results).expect("serializable");
        let prompt = self.prompts.render(
            Template::SpecialistReport,
            &[("agent_name", &self.card.name), ("task", task), ("results", &results)],
        );
        result.llm_calls += 1;
        result.synthesis = self.llm.ask("agent_synthesis", &prompt)?;
        Ok(())
    }

    /// Check the planner's calls, run the confirmed ones, report.
    pub fn execute_centralized(&self, step_id: &str, task: &str, instructions: &[ToolInstruction]) -> StepResult {
        let mut result = StepResult::begin(step_id, &self.card.agent_id);
        if instructions.is_empty() {
            return result.fail("no tool instructions given");
        }
        if let Some(err) = instructions.iter().find_map(|i| self.whitelist_check(&i.tool).err()) {
            return result.fail(err);
        }
        let proposed: Vec<_> = instructions
            .iter()
            .map(|i| json!({"tool": i.tool, "parameters": i.parameters, "expected_output": i.expected_output}))
            .collect();
        let proposed = serde_json::to_string_pretty(&proposed).expect("serializable");
        let prompt = self.prompts.render(
            Template::SpecialistCheck,
            &[
                ("agent_name", &self.card.name),
                ("agent_role", &self.card.role),
                ("task", task),
                ("tool_instructions", &proposed),
                ("available_tools", &self.tool_list()),
            ],
        );
        let mut calls = 0;
        let response = ask_structured(&self.llm, "agent_validation", &prompt, self.prompts, &mut calls, |text| {
            let r: SpecialistResponse = decode(text)?;
            if r.refined_instructions.is_empty() {
                return Err("refined_instructions is empty".into());
            }
            for i in &r.refined_instructions {
                self.whitelist_check(&i.tool)?;
            }
            Ok(r)
        });
        result.llm_calls = calls;
        let response = match response {
            Ok(r) => r,
            Err(AskError::Backend(e)) => return result.fail(format!("llm: {e}")),
            Err(AskError::Malformed { attempts, detail }) => {
                return result.fail(format!("malformed LLM output after {attempts} attempt(s): {detail}"))
            }
        };
        result.validation = Some(response.validation);
        for i in response.refined_instructions {
            let call = self.invoke(&i.tool, i.parameters);
            result.executed_calls.push(call);
        }
        let planned: Vec<_> = instructions.iter().map(|i| (i.tool.clone(), i.parameters.clone())).collect();
        let executed: Vec<_> =
            result.executed_calls.iter().map(|c| (c.call.tool.clone(), c.call.arguments.clone())).collect();
        result.deviation = Some(diff_calls(&planned, &executed));
        if let Err(e) = self.synthesize(task, &mut result) {
            return result.fail(format!("llm: {e}"));
        }
        result.finish()
    }

    /// Plan own calls for `task`, run them, report.
    pub fn execute_decentralized(&self, step_id: &str, task: &str) -> StepResult {
        let mut result = StepResult::begin(step_id, &self.card.agent_id);
        if self.card.available_tools.is_empty() {
            return result.fail("agent has no tools");
        }
        let schemas = self.catalog.schema_blocks(self.card.available_tools.iter().map(String::as_str));
        let prompt = self.prompts.render(
            Template::SpecialistPlan,
            &[
                ("agent_name", &self.card.name),
                ("agent_role", &self.card.role),
                ("tool_descriptions_with_schemas", &schemas),
                ("request", task),
            ],
        );
        let mut calls = 0;
        let plan = ask_structured(&self.llm, "agent_planning", &prompt, self.prompts, &mut calls, |text| {
            let p: SpecialistPlan = decode(text)?;
            for c in &p.tool_calls {
                self.whitelist_check(&c.tool)?;
            }
            Ok(p)
        });
        result.llm_calls = calls;
        let plan = match plan {
            Ok(p) => p,
            Err(AskError::Backend(e)) => return result.fail(format!("llm: {e}")),
            Err(AskError::Malformed { attempts, detail }) => {
                return result.fail(format!("malformed LLM output after {attempts} attempt(s): {detail}"))
            }
        };
        if plan.tool_calls.is_empty() {
            return result.fail("no tools planned");
        }
        for c in plan.tool_calls {
            let call = self.invoke(&c.tool, c.parameters);
            result.executed_calls.push(call);
        }
        if let Err(e) = self.synthesize(task, &mut result) {
            return result.fail(format!("llm: {e}"));
        }
        result.finish()
    }
}
