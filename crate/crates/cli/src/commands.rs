use std::io::{BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use bemas_bench::{
    aggregate, default_cases, load_cases, read_records, run_matrix, write_report, write_summary_csv, BackendFactory,
    GoldenFactory, GroupBy, MatrixConfig, RegistryFactory, SummaryRow, SUMMARY_HEADERS,
};
use bemas_llm::BackendRegistry;
use bemas_orchestrator::{
    default_cards, load_cards_dir, AgentCard, Mode, Orchestrator, OrchestratorOptions, PromptSet, SessionTrace,
};
use bemas_runtime::{shared_registry, Runtime};
use bemas_toolbus::transport::{serve_lines, TcpToolServer, TransportError};
use bemas_toolbus::ToolBus;

use crate::config::{parse_pairs, CliConfig};
use crate::error::CliError;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn fault(e: impl std::fmt::Display) -> CliError {
    CliError::Fault(e.to_string())
}

fn tool_bus() -> Arc<ToolBus> {
    let (_, reg) = shared_registry(Runtime::new());
    Arc::new(ToolBus::new(reg))
}

pub fn serve_tcp(_: &CliConfig, host: &str, port: u16) -> Result<(), CliError> {
    let bus = tool_bus();
    let n = bus.registry().len();
    let server = match TcpToolServer::bind(bus, format!("{host}:{port}")) {
        Ok(s) => s,
        Err(TransportError::PortInUse(a)) => return Err(fault(format!("PortInUse: {a}"))),
        Err(e) => return Err(fault(e)),
    };
    let addr = server.local_addr().map_err(fault)?;
    println!("serving {n} tools on tcp://{addr}");
    std::io::stdout().flush().map_err(fault)?;
    server.run();
    Ok(())
}

/// Frames go to stdout, so the banner goes to stderr.
pub fn serve_stdio(_: &CliConfig) -> Result<(), CliError> {
    let bus = tool_bus();
    eprintln!("serving {} tools on stdio", bus.registry().len());
    serve_lines(&bus, std::io::stdin().lock(), std::io::stdout().lock()).map_err(fault)
}

fn cards(cfg: &CliConfig) -> Result<Vec<AgentCard>, CliError> {
    match &cfg.cards_dir {
        Some(d) if d.is_dir() => {
            let cards = load_cards_dir(d).map_err(usage)?;
            Ok(if cards.is_empty() { default_cards() } else { cards })
        }
        Some(d) => Err(usage(format!("cards directory {} does not exist", d.display()))),
        None => Ok(default_cards()),
    }
}

fn prompts(cfg: &CliConfig) -> Result<Option<PromptSet>, CliError> {
    cfg.prompts_dir
        .as_deref()
        .map(|d| {
            if !d.is_dir() {
                return Err(usage(format!("prompts directory {} does not exist", d.display())));
            }
            PromptSet::load_dir(d).map_err(|e| usage(format!("{}: {e}", d.display())))
        })
        .transpose()
}

fn registry(cfg: &CliConfig) -> Result<BackendRegistry, CliError> {
    let path = cfg.backends.as_deref().ok_or_else(|| usage("--backends is required"))?;
    BackendRegistry::load(path).map_err(usage)
}

fn orchestrator(cfg: &CliConfig) -> Result<Orchestrator, CliError> {
    let reg = registry(cfg)?;
    let pick = |id: &Option<String>, flag: &str| {
        let id = id.as_deref().ok_or_else(|| usage(format!("--{flag} is required")))?;
        reg.build(id).map_err(usage)
    };
    let planner = pick(&cfg.orchestrator_backend, "orchestrator-backend")?;
    let specialist = pick(&cfg.specialist_backend, "specialist-backend")?;
    let results = cfg.results_dir();
    let (rt, reg) = shared_registry(Runtime::new().with_results_dir(&results));
    let bus = Arc::new(ToolBus::new(reg));
    let mut orch = Orchestrator::over_bus(bus, cards(cfg)?, planner, specialist)
        .map_err(usage)?
        .with_options(OrchestratorOptions {
            mode: cfg.mode(),
            parallel: cfg.parallel() > 1,
            hr_enabled: cfg.hr.unwrap_or(false),
            cards_dir: cfg.cards_dir.clone(),
        })
        .with_context(move || rt.lock().map(|r| r.context_summary()).unwrap_or_default());
    if let Some(p) = prompts(cfg)? {
        orch = orch.with_prompts(p);
    }
    Ok(orch)
}

fn save_trace(cfg: &CliConfig, trace: &SessionTrace) -> Result<PathBuf, CliError> {
    let path = cfg.results_dir().join("traces").join(format!("{}.json", trace.session_id));
    trace.save(&path).map_err(|e| fault(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn answer(cfg: &CliConfig, orch: &mut Orchestrator, request: &str) -> Result<(), CliError> {
    let trace = orch.handle(request);
    println!("{}", trace.answer.trim_end());
    if cfg.trace.unwrap_or(false) {
        eprintln!("trace: {}", save_trace(cfg, &trace)?.display());
    }
    std::io::stdout().flush().map_err(fault)
}

pub fn run_once(cfg: &CliConfig, request: &str) -> Result<(), CliError> {
    let mut orch = orchestrator(cfg)?;
    if cfg.trace.unwrap_or(false) {
        cfg.snapshot(&cfg.results_dir())?;
    }
    answer(cfg, &mut orch, request)
}

pub fn chat(cfg: &CliConfig) -> Result<(), CliError> {
    let mut orch = orchestrator(cfg)?;
    if cfg.trace.unwrap_or(false) {
        cfg.snapshot(&cfg.results_dir())?;
    }
    let stdin = std::io::stdin();
    let interactive = stdin.is_terminal();
    let prompt = || {
        if interactive {
            eprint!("> ");
            let _ = std::io::stderr().flush();
        }
    };
    prompt();
    for line in stdin.lock().lines() {
        let line = line.map_err(fault)?;
        let msg = line.trim();
        if matches!(msg, "exit" | "quit") {
            break;
        }
        if !msg.is_empty() {
            answer(cfg, &mut orch, msg)?;
        }
        prompt();
    }
    Ok(())
}

pub fn bench(cfg: &CliConfig) -> Result<(), CliError> {
    let b = cfg.bench();
    let cases = match &b.cases {
        Some(p) => load_cases(p).map_err(usage)?,
        None => default_cases(),
    };
    let modes = b.modes.clone().unwrap_or_else(|| Mode::ALL.to_vec());
    let pairs = parse_pairs(&b.pairs.clone().unwrap_or_else(|| vec!["all".into()]))?;
    if modes.is_empty() || pairs.is_empty() {
        return Err(usage("at least one mode and one tier pair are required"));
    }
    let factory: Box<dyn BackendFactory> = if b.golden.unwrap_or(false) {
        Box::new(GoldenFactory::new())
    } else if cfg.backends.is_some() {
        Box::new(RegistryFactory::new(registry(cfg)?))
    } else {
        return Err(usage("bench needs --backends with tier-labelled backends, or --golden"));
    };
    let out = cfg.results_dir();
    cfg.snapshot(&out)?;
    let matrix = MatrixConfig {
        modes,
        pairs,
        tool_metric: b.tool_metric.unwrap_or_default(),
        cards: cfg.cards_dir.as_ref().map(|_| cards(cfg)).transpose()?,
        prompts: prompts(cfg)?,
        parallelism: cfg.parallel(),
        out_dir: Some(out.clone()),
    };
    eprintln!("running {} runs", matrix.run_count(cases.len()));
    let records = run_matrix(&cases, &matrix, factory.as_ref());
    write_report(&records, &out).map_err(fault)?;
    print_table(&aggregate(&records, GroupBy::Mode), GroupBy::Mode);
    let crashed = records.iter().filter(|r| r.crashed).count();
    println!("{} runs, {crashed} crashed; results in {}", records.len(), out.display());
    if crashed > 0 {
        return Err(fault(format!("{crashed} run(s) crashed")));
    }
    Ok(())
}

pub fn report(
    cfg: &CliConfig,
    records: Option<PathBuf>,
    group_by: &[String],
    csv: Option<PathBuf>,
) -> Result<(), CliError> {
    let path = records.unwrap_or_else(|| cfg.results_dir().join("records.jsonl"));
    let records = read_records(&path).map_err(usage)?;
    let groups: Vec<GroupBy> = group_by.iter().map(|g| g.parse().map_err(CliError::Usage)).collect::<Result<_, _>>()?;
    for &g in &groups {
        print_table(&aggregate(&records, g), g);
    }
    if let Some(p) = csv {
        write_csv(&p, &records, &groups)?;
    }
    Ok(())
}

fn write_csv(p: &Path, records: &[bemas_bench::RunRecord], groups: &[GroupBy]) -> Result<(), CliError> {
    let f = std::fs::File::create(p).map_err(|e| fault(format!("{}: {e}", p.display())))?;
    write_summary_csv(records, groups, f).map_err(fault)
}

/// Metrics down the side, groups across.
fn print_table(rows: &[SummaryRow], by: GroupBy) {
    let f = |x: f64| format!("{x:.4}");
    let opt = |x: Option<f64>| x.map(f).unwrap_or_else(|| "-".into());
    let columns: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c = vec![r.group.clone(), r.runs.to_string()];
            c.extend(
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
            c.push(opt(r.adherence_rate));
            c.extend(r.deviation_shares.values().map(|&x| f(x)));
            c.push(r.crashes.to_string());
            c
        })
        .collect();
    let labels = &SUMMARY_HEADERS[..SUMMARY_HEADERS.len() - 2];
    let lw = labels.iter().map(|l| l.len()).max().unwrap_or(0);
    let cw = columns.iter().flatten().map(String::len).max().unwrap_or(0).max(8);
    println!("== by {} ==", by.label());
    for (i, label) in labels.iter().enumerate() {
        let label = if i == 0 { by.label() } else { label };
        let cells: Vec<String> = columns.iter().map(|c| format!("{:>cw$}", c[i])).collect();
        println!("{label:<lw$}  {}", cells.join("  "));
    }
}
