use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::values::maps_match;
use crate::JsonMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationType {
    ToolRemoval,
    ToolAddition,
    ParameterModification,
    Mixed,
}

impl DeviationType {
    pub const ALL: [DeviationType; 4] = [
        DeviationType::ToolRemoval,
        DeviationType::ToolAddition,
        DeviationType::ParameterModification,
        DeviationType::Mixed,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DeviationType::ToolRemoval => "tool_removal",
            DeviationType::ToolAddition => "tool_addition",
            DeviationType::ParameterModification => "parameter_modification",
            DeviationType::Mixed => "mixed",
        }
    }
}

/// Whether executed calls matched the planner's instructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adherence {
    Followed,
    Deviated(DeviationType),
}

impl Adherence {
    pub fn is_deviated(self) -> bool {
        matches!(self, Adherence::Deviated(_))
    }

    pub fn label(self) -> &'static str {
        match self {
            Adherence::Followed => "followed",
            Adherence::Deviated(d) => d.label(),
        }
    }
}

/// Maps the three discrepancy flags to exactly one class.
pub fn classify(removal: bool, addition: bool, param_change: bool) -> Adherence {
    match (removal, addition, param_change) {
        (false, false, false) => Adherence::Followed,
        (true, false, false) => Adherence::Deviated(DeviationType::ToolRemoval),
        (false, true, false) => Adherence::Deviated(DeviationType::ToolAddition),
        (false, false, true) => Adherence::Deviated(DeviationType::ParameterModification),
        _ => Adherence::Deviated(DeviationType::Mixed),
    }
}

/// Itemized difference between instructed and executed calls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub adherence: Adherence,
    /// Instructed tools with no executed counterpart.
    pub removed: Vec<String>,
    /// Executed tools nobody instructed.
    pub added: Vec<String>,
    /// Tools executed with parameters other than instructed.
    pub modified: Vec<String>,
}

impl Deviation {
    pub fn deviated(&self) -> bool {
        self.adherence.is_deviated()
    }

    pub fn flags(&self) -> (bool, bool, bool) {
        (!self.removed.is_empty(), !self.added.is_empty(), !self.modified.is_empty())
    }
}

/// Compares planned and executed calls as multisets of tool names.
///
/// Calls to the same tool are paired in order of occurrence; unpaired planned
/// calls are removals, unpaired executed calls are additions, and paired calls
/// whose flattened parameters differ are modifications.
pub fn diff_calls(planned: &[(String, JsonMap)], executed: &[(String, JsonMap)]) -> Deviation {
    let mut by_tool: BTreeMap<&str, (Vec<&JsonMap>, Vec<&JsonMap>)> = BTreeMap::new();
    for (t, p) in planned {
        by_tool.entry(t).or_default().0.push(p);
    }
    for (t, p) in executed {
        by_tool.entry(t).or_default().1.push(p);
    }
    let (mut removed, mut added, mut modified) = (Vec::new(), Vec::new(), Vec::new());
    for (tool, (plan, exec)) in by_tool {
        for (p, e) in plan.iter().zip(&exec) {
            if !maps_match(p, e) {
                modified.push(tool.to_string());
            }
        }
        removed.extend(std::iter::repeat_n(tool.to_string(), plan.len().saturating_sub(exec.len())));
        added.extend(std::iter::repeat_n(tool.to_string(), exec.len().saturating_sub(plan.len())));
    }
    let adherence = classify(!removed.is_empty(), !added.is_empty(), !modified.is_empty());
    Deviation { adherence, removed, added, modified }
}
