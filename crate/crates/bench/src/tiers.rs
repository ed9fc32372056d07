//! Model capability tiers and orchestrator/specialist pairings.

use std::fmt;
use std::str::FromStr;

use bemas_llm::Pricing;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    #[serde(rename = "S")]
    S,
    #[serde(rename = "M")]
    M,
    #[serde(rename = "L")]
    L,
    #[serde(rename = "XL")]
    Xl,
    #[serde(rename = "API")]
    Api,
}

impl Tier {
    /// Weakest first.
    pub const ALL: [Tier; 5] = [Tier::S, Tier::M, Tier::L, Tier::Xl, Tier::Api];

    pub fn label(self) -> &'static str {
        match self {
            Tier::S => "S",
            Tier::M => "M",
            Tier::L => "L",
            Tier::Xl => "XL",
            Tier::Api => "API",
        }
    }

    /// Default model behind the tier when backends come from a registry file.
    pub fn model(self) -> &'static str {
        match self {
            Tier::S => "qwen3:1.7b",
            Tier::M => "qwen3:4b",
            Tier::L => "gemma2:9b",
            Tier::Xl => "qwen3:30b",
            Tier::Api => "gpt-4o-mini",
        }
    }

    /// USD per million tokens; local tiers are free.
    pub fn pricing(self) -> Pricing {
        match self {
            Tier::Api => Pricing::new(0.15, 0.60),
            _ => Pricing::new(0.0, 0.0),
        }
    }

    pub fn rank(self) -> usize {
        Tier::ALL.iter().position(|t| *t == self).expect("listed")
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Tier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Tier::ALL
            .into_iter()
            .find(|t| t.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown tier '{s}' (expected S, M, L, XL or API)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TierPair {
    pub orchestrator: Tier,
    pub specialist: Tier,
}

impl TierPair {
    pub fn new(orchestrator: Tier, specialist: Tier) -> Self {
        Self { orchestrator, specialist }
    }

    pub fn label(self) -> String {
        format!("{}-{}", self.orchestrator, self.specialist)
    }
}

impl fmt::Display for TierPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.orchestrator, self.specialist)
    }
}

/// Parses `ORCH-SPEC`, e.g. `API-S`, or `ORCH/SPEC`.
impl FromStr for TierPair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (o, sp) = s.split_once(['-', '/', ':']).ok_or_else(|| format!("tier pair '{s}' is not ORCH-SPEC"))?;
        Ok(TierPair::new(o.parse()?, sp.parse()?))
    }
}

/// All 25 pairings, orchestrator-major, weakest first.
pub fn all_pairs() -> Vec<TierPair> {
    Tier::ALL.iter().flat_map(|&o| Tier::ALL.iter().map(move |&s| TierPair::new(o, s))).collect()
}
