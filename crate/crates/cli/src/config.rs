use std::path::{Path, PathBuf};

use bemas_bench::{TierPair, ToolMetric};
use bemas_orchestrator::Mode;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Effective settings: the config file, then command-line flags on top.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cards_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompts_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backends: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub results_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orchestrator_backend: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specialist_backend: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hr: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<Mode>>,
    /// `ORCH-SPEC` labels, or `all`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_metric: Option<ToolMetric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub golden: Option<bool>,
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Fields set in `flags` replace ours.
    pub fn overlay(mut self, flags: CliConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f; } )* };
        }
        take!(
            cards_dir,
            prompts_dir,
            backends,
            results_dir,
            mode,
            orchestrator_backend,
            specialist_backend,
            parallel,
            trace,
            hr
        );
        if let Some(b) = flags.bench {
            let mut mine = self.bench.take().unwrap_or_default();
            macro_rules! take_bench {
                ($($f:ident),*) => { $( if b.$f.is_some() { mine.$f = b.$f; } )* };
            }
            take_bench!(cases, modes, pairs, tool_metric, golden);
            self.bench = Some(mine);
        }
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(Mode::C2)
    }

    pub fn results_dir(&self) -> PathBuf {
        self.results_dir.clone().unwrap_or_else(|| PathBuf::from("results"))
    }

    pub fn parallel(&self) -> usize {
        self.parallel.unwrap_or(1)
    }

    pub fn bench(&self) -> BenchSection {
        self.bench.clone().unwrap_or_default()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Writes the effective config as `config.toml` into `dir`.
    pub fn snapshot(&self, dir: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Fault(format!("{}: {e}", dir.display())))?;
        let path = dir.join("config.toml");
        std::fs::write(&path, self.to_toml()).map_err(|e| CliError::Fault(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn parse_pairs(labels: &[String]) -> Result<Vec<TierPair>, CliError> {
    if labels.iter().any(|l| l.eq_ignore_ascii_case("all")) {
        return Ok(bemas_bench::all_pairs());
    }
    labels.iter().map(|l| l.parse().map_err(CliError::Usage)).collect()
}
