use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use bemas_orchestrator::{Adherence, DeviationType};
use serde::Serialize;
use thiserror::Error;

use crate::metrics::ToolMetric;
use crate::runner::RunRecord;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {detail}")]
    BadRecord { path: String, line: usize, detail: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupBy {
    Mode,
    TierPair,
    Category,
    OrchestratorTier,
    SpecialistTier,
}

impl GroupBy {
    pub const ALL: [GroupBy; 5] =
        [GroupBy::Mode, GroupBy::TierPair, GroupBy::Category, GroupBy::OrchestratorTier, GroupBy::SpecialistTier];

    pub fn label(self) -> &'static str {
        match self {
            GroupBy::Mode => "mode",
            GroupBy::TierPair => "tier_pair",
            GroupBy::Category => "category",
            GroupBy::OrchestratorTier => "orchestrator_tier",
            GroupBy::SpecialistTier => "specialist_tier",
        }
    }

    /// Key plus a sort rank so tiers order weakest first.
    fn key(self, r: &RunRecord) -> (usize, String) {
        match self {
            GroupBy::Mode => (r.mode as usize, r.mode.to_string()),
            GroupBy::TierPair => (r.orchestrator_tier.rank() * 10 + r.specialist_tier.rank(), r.pair().label()),
            GroupBy::Category => (r.category as usize, r.category.label().to_string()),
            GroupBy::OrchestratorTier => (r.orchestrator_tier.rank(), r.orchestrator_tier.to_string()),
            GroupBy::SpecialistTier => (r.specialist_tier.rank(), r.specialist_tier.to_string()),
        }
    }
}

impl std::str::FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.to_ascii_lowercase().replace('-', "_");
        GroupBy::ALL
            .into_iter()
            .find(|g| g.label() == s || (s == "pair" && *g == GroupBy::TierPair))
            .ok_or_else(|| format!("unknown grouping '{s}'"))
    }
}

/// Means over one group of runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub group: String,
    pub runs: usize,
    pub acc_tool: f64,
    pub acc_agent: f64,
    pub acc_plan: f64,
    pub acc_key: f64,
    pub acc_val: f64,
    pub acc_combined: f64,
    pub total_time_s: f64,
    pub planning_time_s: f64,
    pub execution_time_s: f64,
    pub synthesis_time_s: f64,
    pub orchestrator_tokens: f64,
    pub agent_tokens: f64,
    pub total_tokens: f64,
    pub orchestrator_cost: f64,
    pub agent_cost: f64,
    pub total_cost: f64,
    /// Share of centralized runs that followed instructions; None when the
    /// group has no centralized runs.
    pub adherence_rate: Option<f64>,
    /// Share of deviating runs per deviation type.
    pub deviation_shares: BTreeMap<DeviationType, f64>,
    pub crashes: usize,
}

fn mean(rs: &[&RunRecord], f: impl Fn(&RunRecord) -> f64) -> f64 {
    if rs.is_empty() {
        0.0
    } else {
        rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64
    }
}

impl SummaryRow {
    pub fn from_records(group: String, rs: &[&RunRecord]) -> Self {
        let judged: Vec<Adherence> = rs.iter().filter_map(|r| r.adherence).collect();
        let deviated: Vec<DeviationType> = judged
            .iter()
            .filter_map(|a| match a {
                Adherence::Deviated(d) => Some(*d),
                Adherence::Followed => None,
            })
            .collect();
        let adherence_rate = (!judged.is_empty()).then(|| (judged.len() - deviated.len()) as f64 / judged.len() as f64);
        let deviation_shares = DeviationType::ALL
            .into_iter()
            .map(|t| {
                let n = deviated.iter().filter(|&&d| d == t).count();
                (t, if deviated.is_empty() { 0.0 } else { n as f64 / deviated.len() as f64 })
            })
            .collect();
        Self {
            group,
            runs: rs.len(),
            acc_tool: mean(rs, |r| r.acc_tool),
            acc_agent: mean(rs, |r| r.acc_agent),
            acc_plan: mean(rs, |r| r.acc_plan),
            acc_key: mean(rs, |r| r.acc_key),
            acc_val: mean(rs, |r| r.acc_val),
            acc_combined: mean(rs, |r| r.acc_combined),
            total_time_s: mean(rs, |r| r.total_time_s),
            planning_time_s: mean(rs, |r| r.planning_time_s),
            execution_time_s: mean(rs, |r| r.execution_time_s),
            synthesis_time_s: mean(rs, |r| r.synthesis_time_s),
            orchestrator_tokens: mean(rs, |r| r.orchestrator_tokens as f64),
            agent_tokens: mean(rs, |r| r.agent_tokens as f64),
            total_tokens: mean(rs, |r| r.total_tokens as f64),
            orchestrator_cost: mean(rs, |r| r.orchestrator_cost),
            agent_cost: mean(rs, |r| r.agent_cost),
            total_cost: mean(rs, |r| r.total_cost),
            adherence_rate,
            deviation_shares,
            crashes: rs.iter().filter(|r| r.crashed).count(),
        }
    }
}

/// One row per group, in a stable order.
pub fn aggregate(records: &[RunRecord], by: GroupBy) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(by.key(r)).or_default().push(r);
    }
    groups.into_iter().map(|((_, k), rs)| SummaryRow::from_records(k, &rs)).collect()
}

pub const SUMMARY_HEADERS: [&str; 26] = [
    "group",
    "runs",
    "Tool selection accuracy",
    "Agent selection accuracy",
    "Plan step accuracy",
    "Parameter accuracy (key)",
    "Parameter accuracy (value)",
    "Combined accuracy",
    "Total time",
    "Planning time",
    "Execution time",
    "Synthesis time",
    "Orchestrator tokens",
    "Agent tokens",
    "Total tokens",
    "Orchestrator cost",
    "Agent cost",
    "Total cost",
    "Adherence rate",
    "Tool removal share",
    "Tool addition share",
    "Parameter modification share",
    "Mixed share",
    "Crashes",
    "grouping",
    "metric",
];

/// Summary rows for each grouping under one header line. The tool metric in
/// force is reported in its own column.
pub fn write_summary_csv(records: &[RunRecord], groupings: &[GroupBy], w: impl Write) -> Result<(), ReportError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADERS)?;
    let metric = metric_label(records);
    let f = |x: f64| format!("{x:.6}");
    for (by, r) in groupings.iter().flat_map(|&by| aggregate(records, by).into_iter().map(move |r| (by, r))) {
        let mut rec = vec![r.group.clone(), r.runs.to_string()];
        rec.extend(
            [
                r.acc_tool,
                r.acc_agent,
                r.acc_plan,
                r.acc_key,
                r.acc_val,
                r.acc_combined,
                r.total_time_s,
                r.planning_time_s,
                r.execution_time_s,
                r.synthesis_time_s,
                r.orchestrator_tokens,
                r.agent_tokens,
                r.total_tokens,
                r.orchestrator_cost,
                r.agent_cost,
                r.total_cost,
            ]
            .map(f),
        );
        rec.push(r.adherence_rate.map(f).unwrap_or_default());
        rec.extend(DeviationType::ALL.map(|t| f(r.deviation_shares[&t])));
        rec.push(r.crashes.to_string());
        rec.push(by.label().to_string());
        rec.push(metric.to_string());
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| ReportError::Io { path: "summary".into(), source: e })?;
    Ok(())
}

pub fn write_records(records: &[RunRecord], path: &Path) -> Result<(), ReportError> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d).map_err(io_err(d))?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    for r in records {
        let line = serde_json::to_string(r).expect("record serializes");
        writeln!(f, "{line}").map_err(io_err(path))?;
    }
    f.flush().map_err(io_err(path))
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, ReportError> {
    let f = std::fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| ReportError::BadRecord {
            path: path.display().to_string(),
            line: i + 1,
            detail: e.to_string(),
        })?;
        out.push(r);
    }
    Ok(out)
}

/// Writes `records.jsonl` and `summary.csv`, the latter holding one block of
/// rows per grouping.
pub fn write_report(records: &[RunRecord], dir: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_records(records, &dir.join("records.jsonl"))?;
    let p = dir.join("summary.csv");
    let f = std::fs::File::create(&p).map_err(io_err(&p))?;
    write_summary_csv(records, &GroupBy::ALL, f)
}

pub fn metric_label(records: &[RunRecord]) -> &'static str {
    match records.first().map(|r| r.tool_metric) {
        Some(ToolMetric::Jaccard) => "jaccard",
        _ => "recall",
    }
}
