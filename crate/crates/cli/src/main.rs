//! `bemas`: serve the tool bus, chat, run single requests, benchmark and report.

mod commands;
mod config;
mod error;

use std::path::PathBuf;

use bemas_bench::ToolMetric;
use bemas_orchestrator::Mode;
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{BenchSection, CliConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "bemas", version, about = "Multi-agent building energy assistant")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    cards_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    prompts_dir: Option<PathBuf>,
    /// Backend registry (JSON list of backend specs).
    #[arg(long, global = true)]
    backends: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    orchestrator_backend: Option<String>,
    #[arg(long, global = true)]
    specialist_backend: Option<String>,
    #[arg(long, global = true)]
    results_dir: Option<PathBuf>,
    /// Worker threads for bench; >1 runs independent plan steps concurrently elsewhere.
    #[arg(long, global = true)]
    parallel: Option<usize>,
    /// Save each session trace and print its path.
    #[arg(long, global = true)]
    trace: bool,
    /// Review the agent pool before planning.
    #[arg(long, global = true)]
    hr: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Transport {
    Tcp,
    Stdio,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Recall,
    Jaccard,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expose every tool over JSON-RPC.
    Serve {
        #[arg(long, value_enum, default_value = "tcp")]
        transport: Transport,
        #[arg(long, default_value_t = 8741)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Read requests from stdin, one per line, until end of input.
    Chat,
    /// Handle one request and print the answer.
    Run {
        #[arg(required = true, num_args = 1..)]
        request: Vec<String>,
    },
    /// Run the benchmark matrix.
    Bench {
        /// JSONL case file; the shipped suite when omitted.
        #[arg(long)]
        cases: Option<PathBuf>,
        /// Comma-separated modes, e.g. c1,c2,d.
        #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
        modes: Option<Vec<Mode>>,
        /// Comma-separated ORCH-SPEC tier pairs, or `all`.
        #[arg(long, value_delimiter = ',')]
        pairs: Option<Vec<String>>,
        #[arg(long, value_enum)]
        tool_metric: Option<MetricArg>,
        /// Replay each case's ground truth with scripted backends.
        #[arg(long)]
        golden: bool,
    },
    /// Summarize a records file.
    Report {
        /// Defaults to records.jsonl in the results directory.
        #[arg(long)]
        records: Option<PathBuf>,
        /// mode, tier_pair, category, orchestrator_tier or specialist_tier; repeatable.
        #[arg(long = "group-by", default_value = "mode")]
        group_by: Vec<String>,
        /// Also write the tables as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

impl GlobalArgs {
    fn as_config(&self) -> CliConfig {
        CliConfig {
            cards_dir: self.cards_dir.clone(),
            prompts_dir: self.prompts_dir.clone(),
            backends: self.backends.clone(),
            results_dir: self.results_dir.clone(),
            mode: self.mode,
            orchestrator_backend: self.orchestrator_backend.clone(),
            specialist_backend: self.specialist_backend.clone(),
            parallel: self.parallel,
            trace: self.trace.then_some(true),
            hr: self.hr.then_some(true),
            bench: None,
        }
    }
}

fn effective_config(cli: &Cli) -> Result<CliConfig, CliError> {
    let base = match &cli.global.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    let mut flags = cli.global.as_config();
    if let Command::Bench { cases, modes, pairs, tool_metric, golden, .. } = &cli.command {
        flags.bench = Some(BenchSection {
            cases: cases.clone(),
            modes: modes.clone(),
            pairs: pairs.clone(),
            tool_metric: tool_metric.map(|m| match m {
                MetricArg::Recall => ToolMetric::Recall,
                MetricArg::Jaccard => ToolMetric::Jaccard,
            }),
            golden: golden.then_some(true),
        });
    }
    Ok(base.overlay(flags))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = effective_config(&cli)?;
    match cli.command {
        Command::Serve { transport: Transport::Tcp, port, host } => commands::serve_tcp(&cfg, &host, port),
        Command::Serve { transport: Transport::Stdio, .. } => commands::serve_stdio(&cfg),
        Command::Chat => commands::chat(&cfg),
        Command::Run { request } => commands::run_once(&cfg, &request.join(" ")),
        Command::Bench { .. } => commands::bench(&cfg),
        Command::Report { records, group_by, csv } => commands::report(&cfg, records, &group_by, csv),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
