//! Ground-truth test cases, one JSON object per line.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use bemas_orchestrator::JsonMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "SAST")]
    Sast,
    #[serde(rename = "SAMT")]
    Samt,
    #[serde(rename = "MAST")]
    Mast,
    #[serde(rename = "MAMT")]
    Mamt,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Sast, Category::Samt, Category::Mast, Category::Mamt];

    pub fn label(self) -> &'static str {
        match self {
            Category::Sast => "SAST",
            Category::Samt => "SAMT",
            Category::Mast => "MAST",
            Category::Mamt => "MAMT",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedStep {
    pub step_order: u32,
    pub agent_id: String,
    pub required_tools: Vec<String>,
    /// tool → argument map; nested maps and dotted keys are equivalent.
    #[serde(default)]
    pub expected_parameters: JsonMap,
}

impl ExpectedStep {
    pub fn params_for(&self, tool: &str) -> JsonMap {
        self.expected_parameters.get(tool).and_then(|v| v.as_object()).cloned().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub test_id: String,
    pub name: String,
    pub category: Category,
    pub request: String,
    pub expected_agents: Vec<String>,
    pub expected_tools: Vec<String>,
    pub expected_steps: Vec<ExpectedStep>,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CaseError {
    #[error("BadCaseFile:{line}: {detail}")]
    BadCaseFile { line: usize, detail: String },
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
}

impl TestCase {
    /// Every expected (tool, arguments) pair in step order.
    pub fn expected_calls(&self) -> Vec<(String, JsonMap)> {
        self.expected_steps
            .iter()
            .flat_map(|s| s.required_tools.iter().map(move |t| (t.clone(), s.params_for(t))))
            .collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.test_id.starts_with(&format!("{}_", self.category.label())) {
            return Err(format!("test_id '{}' does not start with {}_", self.test_id, self.category));
        }
        if self.request.trim().is_empty() {
            return Err("request is empty".into());
        }
        if self.expected_steps.is_empty() || self.expected_tools.is_empty() || self.expected_agents.is_empty() {
            return Err("expected agents, tools and steps must be non-empty".into());
        }
        let agents: BTreeSet<&str> = self.expected_agents.iter().map(String::as_str).collect();
        let tools: BTreeSet<&str> = self.expected_tools.iter().map(String::as_str).collect();
        let mut last = 0;
        for s in &self.expected_steps {
            if s.step_order <= last {
                return Err(format!("step_order {} is not strictly increasing", s.step_order));
            }
            last = s.step_order;
            if !agents.contains(s.agent_id.as_str()) {
                return Err(format!("step {} agent '{}' is not in expected_agents", s.step_order, s.agent_id));
            }
            if s.required_tools.is_empty() {
                return Err(format!("step {} has no required_tools", s.step_order));
            }
            if let Some(t) = s.required_tools.iter().find(|t| !tools.contains(t.as_str())) {
                return Err(format!("step {} tool '{t}' is not in expected_tools", s.step_order));
            }
            for (tool, v) in &s.expected_parameters {
                if !s.required_tools.contains(tool) {
                    return Err(format!(
                        "step {} has parameters for '{tool}', which it does not require",
                        s.step_order
                    ));
                }
                if !v.is_object() {
                    return Err(format!("step {} parameters for '{tool}' are not an object", s.step_order));
                }
            }
        }
        Ok(())
    }
}

/// Parses JSONL text. Blank lines are skipped; line numbers are 1-based.
pub fn parse_cases(text: &str) -> Result<Vec<TestCase>, CaseError> {
    let mut out: Vec<TestCase> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let bad = |detail: String| CaseError::BadCaseFile { line: i + 1, detail };
        if line.trim().is_empty() {
            continue;
        }
        let case: TestCase = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        case.validate().map_err(bad)?;
        if out.iter().any(|c| c.test_id == case.test_id) {
            return Err(bad(format!("duplicate test_id '{}'", case.test_id)));
        }
        out.push(case);
    }
    Ok(out)
}

pub fn load_cases(path: &Path) -> Result<Vec<TestCase>, CaseError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CaseError::Io { path: path.display().to_string(), detail: e.to_string() })?;
    parse_cases(&text)
}

const SHIPPED: &str = include_str!("../cases/cases.jsonl");

/// The shipped suite of 53 cases.
pub fn default_cases() -> Vec<TestCase> {
    parse_cases(SHIPPED).expect("shipped cases are valid")
}

pub fn write_cases(cases: &[TestCase]) -> String {
    cases.iter().map(|c| serde_json::to_string(c).expect("serializable") + "\n").collect()
}
