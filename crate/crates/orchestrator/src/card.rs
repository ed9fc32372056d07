use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_yaml::Value;

use crate::error::CardError;

pub const DEFAULT_TEMPERATURE: f64 = 0.3;

fn default_model() -> String {
    "default".into()
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

/// YAML manifest describing one specialist agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCard {
    pub agent_id: String,
    pub name: String,
    pub role: String,
    #[serde(default)]
    pub description: String,
    /// Backend identifier; the runner may override it.
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub capabilities: Vec<String>,
    pub available_tools: Vec<String>,
    #[serde(default)]
    pub example_tasks: Vec<String>,
    #[serde(default)]
    pub constraints: Vec<String>,
}

const REQUIRED: [&str; 4] = ["agent_id", "name", "role", "available_tools"];

/// Parses and checks one card document.
pub fn load_agent_card(document: &str) -> Result<AgentCard, CardError> {
    let value: Value = serde_yaml::from_str(document).map_err(|e| CardError::Parse(e.to_string()))?;
    let Value::Mapping(map) = &value else {
        return Err(CardError::Schema("card must be a mapping".into()));
    };
    for key in REQUIRED {
        match map.get(key) {
            None | Some(Value::Null) => return Err(CardError::Schema(format!("missing required field '{key}'"))),
            _ => {}
        }
    }
    let card: AgentCard = serde_yaml::from_value(value).map_err(|e| CardError::Schema(e.to_string()))?;
    card.check()?;
    Ok(card)
}

impl AgentCard {
    fn check(&self) -> Result<(), CardError> {
        let schema = |m: String| Err(CardError::Schema(m));
        if self.agent_id.trim().is_empty() || self.agent_id.chars().any(char::is_whitespace) {
            return schema(format!("agent_id '{}' must be a non-empty token", self.agent_id));
        }
        if self.name.trim().is_empty() {
            return schema(format!("{}: name must not be empty", self.agent_id));
        }
        if !self.temperature.is_finite() || !(0.0..=2.0).contains(&self.temperature) {
            return schema(format!("{}: temperature {} outside 0-2", self.agent_id, self.temperature));
        }
        for (i, t) in self.available_tools.iter().enumerate() {
            if self.available_tools[..i].contains(t) {
                return schema(format!("{}: tool '{t}' listed twice", self.agent_id));
            }
        }
        Ok(())
    }

    pub fn allows(&self, tool: &str) -> bool {
        self.available_tools.iter().any(|t| t == tool)
    }

    /// Fails on the first listed tool `known` rejects.
    pub fn check_tools(&self, known: impl Fn(&str) -> bool) -> Result<(), CardError> {
        match self.available_tools.iter().find(|t| !known(t)) {
            Some(t) => Err(CardError::UnknownToolInCard { agent: self.agent_id.clone(), tool: t.clone() }),
            None => Ok(()),
        }
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("card serializes")
    }

    /// Writes `<dir>/<agent_id>.yaml`.
    pub fn save(&self, dir: &Path) -> Result<std::path::PathBuf, CardError> {
        let io = |e: std::io::Error| CardError::Io { path: dir.display().to_string(), detail: e.to_string() };
        std::fs::create_dir_all(dir).map_err(io)?;
        let path = dir.join(format!("{}.yaml", self.agent_id));
        std::fs::write(&path, self.to_yaml()).map_err(io)?;
        Ok(path)
    }
}

/// Loads every `*.yaml`/`*.yml` file in `dir`, in file-name order.
pub fn load_cards_dir(dir: &Path) -> Result<Vec<AgentCard>, CardError> {
    let io = |p: &Path, e: std::io::Error| CardError::Io { path: p.display().to_string(), detail: e.to_string() };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| io(dir, e))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| matches!(p.extension().and_then(|x| x.to_str()), Some("yaml" | "yml")))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| io(p, e))?;
            load_agent_card(&text).map_err(|e| match e {
                CardError::Parse(m) => CardError::Parse(format!("{}: {m}", p.display())),
                CardError::Schema(m) => CardError::Schema(format!("{}: {m}", p.display())),
                other => other,
            })
        })
        .collect()
}

const SHIPPED: [&str; 11] = [
    include_str!("../cards/cluster_agent.yaml"),
    include_str!("../cards/building_agent.yaml"),
    include_str!("../cards/der_agent.yaml"),
    include_str!("../cards/hvac_agent.yaml"),
    include_str!("../cards/controller_agent.yaml"),
    include_str!("../cards/disturbance_agent.yaml"),
    include_str!("../cards/environment_agent.yaml"),
    include_str!("../cards/config_agent.yaml"),
    include_str!("../cards/simulation_agent.yaml"),
    include_str!("../cards/analysis_agent.yaml"),
    include_str!("../cards/comparison_agent.yaml"),
];

/// The eleven shipped specialist cards.
pub fn default_cards() -> Vec<AgentCard> {
    SHIPPED.iter().map(|doc| load_agent_card(doc).expect("shipped card is valid")).collect()
}
