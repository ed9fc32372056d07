//! Benchmark harness: test cases, metrics, scripted ground-truth backends,
//! the run matrix and aggregate reports.

pub mod case;
pub mod golden;
pub mod matrix;
pub mod metrics;
pub mod report;
pub mod runner;
pub mod tiers;

pub use case::{default_cases, load_cases, parse_cases, write_cases, CaseError, Category, ExpectedStep, TestCase};
pub use golden::{golden_backends, golden_scripts, marker, CrashingBackend, Fault, GoldenScripts};
pub use matrix::{run_matrix, sort_records, MatrixConfig};
pub use metrics::{
    acc_agent, acc_params, acc_plan, acc_tool, combined, jaccard, recall, MetricError, ParamScore, Ratio, StepSig,
    ToolMetric,
};
pub use report::{
    aggregate, metric_label, read_records, write_records, write_report, write_summary_csv, GroupBy, ReportError,
    SummaryRow, SUMMARY_HEADERS,
};
pub use runner::{
    record_from, run_adherence, run_case, score, ActualTrace, BackendFactory, BackendPair, GoldenFactory,
    RegistryFactory, RunConfig, RunRecord, Scores,
};
pub use tiers::{all_pairs, Tier, TierPair};
