use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;

use crate::card::AgentCard;
use crate::catalog::ToolCatalog;
use crate::error::CardError;

/// Validated set of agent cards in declaration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgentPool {
    cards: Vec<AgentCard>,
}

impl AgentPool {
    /// Checks ids for uniqueness and every listed tool against `catalog`.
    pub fn instantiate(cards: Vec<AgentCard>, catalog: &ToolCatalog) -> Result<Self, CardError> {
        let mut pool = AgentPool::default();
        for c in cards {
            pool.insert(c, catalog)?;
        }
        Ok(pool)
    }

    pub(crate) fn insert(&mut self, card: AgentCard, catalog: &ToolCatalog) -> Result<(), CardError> {
        if self.card(&card.agent_id).is_some() {
            return Err(CardError::DuplicateAgentId(card.agent_id));
        }
        card.check_tools(|t| catalog.contains(t))?;
        self.cards.push(card);
        Ok(())
    }

    pub(crate) fn replace(&mut self, card: AgentCard) {
        if let Some(slot) = self.cards.iter_mut().find(|c| c.agent_id == card.agent_id) {
            *slot = card;
        }
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn cards(&self) -> &[AgentCard] {
        &self.cards
    }

    pub fn card(&self, agent_id: &str) -> Option<&AgentCard> {
        self.cards.iter().find(|c| c.agent_id == agent_id)
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = &str> {
        self.cards.iter().map(|c| c.agent_id.as_str())
    }

    /// Agents whose whitelist includes `tool`.
    pub fn owners(&self, tool: &str) -> Vec<&str> {
        self.cards.iter().filter(|c| c.allows(tool)).map(|c| c.agent_id.as_str()).collect()
    }

    pub fn owned_tools(&self) -> BTreeSet<&str> {
        self.cards.iter().flat_map(|c| c.available_tools.iter().map(String::as_str)).collect()
    }

    /// Catalog tools no agent owns, in catalog order.
    pub fn unassigned_tools<'c>(&self, catalog: &'c ToolCatalog) -> Vec<&'c str> {
        let owned = self.owned_tools();
        catalog.names().filter(|t| !owned.contains(t)).collect()
    }

    /// Tool name to owning agents.
    pub fn ownership(&self) -> HashMap<&str, Vec<&str>> {
        let mut map: HashMap<&str, Vec<&str>> = HashMap::new();
        for c in &self.cards {
            for t in &c.available_tools {
                map.entry(t).or_default().push(&c.agent_id);
            }
        }
        map
    }

    /// Role, capabilities and full tool schemas of every agent.
    pub fn full_summary(&self, catalog: &ToolCatalog) -> String {
        let mut out = String::new();
        for c in &self.cards {
            let _ = writeln!(out, "## {} ({})", c.agent_id, c.name);
            let _ = writeln!(out, "Role: {}", c.role);
            if !c.description.is_empty() {
                let _ = writeln!(out, "Description: {}", c.description);
            }
            if !c.capabilities.is_empty() {
                out.push_str("Capabilities:\n");
                for cap in &c.capabilities {
                    let _ = writeln!(out, "- {cap}");
                }
            }
            if !c.constraints.is_empty() {
                out.push_str("Constraints:\n");
                for k in &c.constraints {
                    let _ = writeln!(out, "- {k}");
                }
            }
            out.push_str("Tools:\n");
            out.push_str(&catalog.schema_blocks(c.available_tools.iter().map(String::as_str)));
            out.push('\n');
        }
        out
    }

    /// Identity and tool names only.
    pub fn minimal_summary(&self) -> String {
        let mut out = String::new();
        for c in &self.cards {
            let _ = writeln!(out, "- {} ({}): {}", c.agent_id, c.name, c.available_tools.join(", "));
        }
        out
    }

    /// Identity and role, for the concierge and the decentralized planner.
    pub fn role_summary(&self) -> String {
        let mut out = String::new();
        for c in &self.cards {
            let _ = writeln!(out, "- {} ({}): {}. Tools: {}", c.agent_id, c.name, c.role, c.available_tools.join(", "));
        }
        out
    }

    /// Roles, capabilities and tool names, for pool review.
    pub fn capability_summary(&self) -> String {
        let mut out = String::new();
        for c in &self.cards {
            let _ = writeln!(out, "- {} ({}): {}", c.agent_id, c.name, c.role);
            for cap in &c.capabilities {
                let _ = writeln!(out, "    can: {cap}");
            }
            let _ = writeln!(out, "    tools: {}", c.available_tools.join(", "));
        }
        out
    }
}
