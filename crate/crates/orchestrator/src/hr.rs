use serde::{Deserialize, Serialize};

use crate::card::{load_agent_card, AgentCard, DEFAULT_TEMPERATURE};
use crate::catalog::ToolCatalog;
use crate::error::HrError;
use crate::pool::AgentPool;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModificationAction {
    Create,
    Revise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Modification {
    pub action: ModificationAction,
    pub agent_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub tools: Vec<String>,
    /// Always rejected: revisions only add tools.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub remove_tools: Vec<String>,
    #[serde(default)]
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrAssessment {
    pub can_handle: bool,
    #[serde(default)]
    pub analysis: String,
    #[serde(default)]
    pub modifications: Vec<Modification>,
}

/// What pool review did during a session.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HrRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assessment: Option<HrAssessment>,
    /// Agent ids created or revised.
    #[serde(default)]
    pub applied: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn invalid(msg: String) -> HrError {
    HrError::InvalidModification(msg)
}

/// Resolves `mods` against the pool into the cards to add or replace.
/// Nothing is applied unless every modification is valid.
pub(crate) fn resolve(
    pool: &AgentPool,
    catalog: &ToolCatalog,
    mods: &[Modification],
) -> Result<Vec<(ModificationAction, AgentCard)>, HrError> {
    let mut out: Vec<(ModificationAction, AgentCard)> = Vec::new();
    for m in mods {
        if let Some(t) = m.tools.iter().find(|t| !catalog.contains(t)) {
            return Err(invalid(format!("{}: unknown tool '{t}'", m.agent_id)));
        }
        if !m.remove_tools.is_empty() {
            return Err(invalid(format!(
                "{}: revisions may only add tools, not remove {}",
                m.agent_id,
                m.remove_tools.join(", ")
            )));
        }
        let pending = out.iter().position(|(_, c)| c.agent_id == m.agent_id);
        match m.action {
            ModificationAction::Create => {
                if pool.card(&m.agent_id).is_some() || pending.is_some() {
                    return Err(invalid(format!("duplicate agent_id '{}'", m.agent_id)));
                }
                if m.tools.is_empty() {
                    return Err(invalid(format!("{}: a new agent needs at least one tool", m.agent_id)));
                }
                let mut tools = Vec::new();
                for t in &m.tools {
                    if !tools.contains(t) {
                        tools.push(t.clone());
                    }
                }
                let card = AgentCard {
                    agent_id: m.agent_id.clone(),
                    name: m.name.clone().unwrap_or_default(),
                    role: m.role.clone().unwrap_or_default(),
                    description: m.description.clone().unwrap_or_default(),
                    model: "default".into(),
                    temperature: DEFAULT_TEMPERATURE,
                    capabilities: Vec::new(),
                    available_tools: tools,
                    example_tasks: Vec::new(),
                    constraints: Vec::new(),
                };
                if card.name.trim().is_empty() || card.role.trim().is_empty() {
                    return Err(invalid(format!("{}: a new agent needs a name and a role", m.agent_id)));
                }
                let reloaded = load_agent_card(&card.to_yaml()).map_err(|e| invalid(format!("{}: {e}", m.agent_id)))?;
                out.push((ModificationAction::Create, reloaded));
            }
            ModificationAction::Revise => {
                let base = match pending {
                    Some(i) => out[i].1.clone(),
                    None => pool
                        .card(&m.agent_id)
                        .cloned()
                        .ok_or_else(|| invalid(format!("cannot revise unknown agent '{}'", m.agent_id)))?,
                };
                let mut card = base;
                for t in &m.tools {
                    if !card.allows(t) {
                        card.available_tools.push(t.clone());
                    }
                }
                match pending {
                    Some(i) => out[i].1 = card,
                    None => out.push((ModificationAction::Revise, card)),
                }
            }
        }
    }
    Ok(out)
}
