use std::path::PathBuf;

use bemas_orchestrator::{AgentCard, Mode, PromptSet};
use rayon::prelude::*;

use crate::case::TestCase;
use crate::metrics::ToolMetric;
use crate::runner::{run_case, BackendFactory, RunConfig, RunRecord};
use crate::tiers::TierPair;

/// Settings shared by every run in a matrix.
#[derive(Debug, Clone, Default)]
pub struct MatrixConfig {
    pub modes: Vec<Mode>,
    pub pairs: Vec<TierPair>,
    pub tool_metric: ToolMetric,
    pub cards: Option<Vec<AgentCard>>,
    pub prompts: Option<PromptSet>,
    /// Worker threads; 0 picks the rayon default.
    pub parallelism: usize,
    pub out_dir: Option<PathBuf>,
}

impl MatrixConfig {
    pub fn new(modes: Vec<Mode>, pairs: Vec<TierPair>) -> Self {
        Self { modes, pairs, ..Default::default() }
    }

    pub fn run_count(&self, cases: usize) -> usize {
        cases * self.modes.len() * self.pairs.len()
    }
}

/// Runs every case under every mode and pair. Each run gets its own runtime,
/// so results do not depend on scheduling; records come back sorted by
/// test id, mode, orchestrator tier and specialist tier.
pub fn run_matrix(cases: &[TestCase], cfg: &MatrixConfig, factory: &dyn BackendFactory) -> Vec<RunRecord> {
    let jobs: Vec<(&TestCase, RunConfig)> = cases
        .iter()
        .flat_map(|c| {
            cfg.modes.iter().flat_map(move |&m| {
                cfg.pairs.iter().map(move |&p| {
                    let rc = RunConfig {
                        mode: m,
                        pair: p,
                        tool_metric: cfg.tool_metric,
                        cards: cfg.cards.clone(),
                        prompts: cfg.prompts.clone(),
                        parallel_steps: false,
                        out_dir: cfg.out_dir.clone(),
                    };
                    (c, rc)
                })
            })
        })
        .collect();
    log::info!("running {} runs", jobs.len());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.parallelism).build().expect("thread pool");
    let mut records: Vec<RunRecord> =
        pool.install(|| jobs.par_iter().map(|(c, rc)| run_case(c, rc, factory)).collect());
    sort_records(&mut records);
    records
}

pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        (&a.test_id, a.mode, a.orchestrator_tier.rank(), a.specialist_tier.rank()).cmp(&(
            &b.test_id,
            b.mode,
            b.orchestrator_tier.rank(),
            b.specialist_tier.rank(),
        ))
    });
}
