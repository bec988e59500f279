use std::path::PathBuf;

use blockcheck::builtins::{head_linearity_waivers, waiver_pairs};
use blockcheck::engine::{monitor, run, Limits, MonitorConfig, MonitorReport, Outcome, RunOptions, SelectionRule, Status, WakePolicy, DEFAULT_STEP_LIMIT};
use blockcheck::modes::Kind;
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::{load, parse_query_arg, print_json, select_modes, Format, InputError, EXIT_FAIL, EXIT_LIMIT, EXIT_PASS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Rule {
    LeftBased,
    Ld,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TraceFormat {
    Text,
    Jsonl,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Program file.
    file: PathBuf,
    /// Query, e.g. `nqueens(4,Sol)`.
    query: String,
    #[arg(long, value_enum, default_value_t = Rule::LeftBased)]
    rule: Rule,
    /// Wake order of the left-based rule: newly-woken-first, latest-suspended-first or leftmost-waiting-first.
    #[arg(long, default_value = "newly-woken-first", value_parser = |s: &str| s.parse::<WakePolicy>())]
    wake: WakePolicy,
    /// Seed of the random rule.
    #[arg(long, env = "BLOCKCHECK_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_STEP_LIMIT, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    /// Stop after this many answers.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    solutions: Option<u64>,
    /// Check persistence of the named condition (nicely, well, simply, robustly) at every step.
    #[arg(long, value_parser = |s: &str| s.parse::<Kind>())]
    monitor: Option<Kind>,
    /// Mode for variable orientation and the monitor; defaults to the first declared mode.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    no_waivers: bool,
    /// Print every resolution step.
    #[arg(long, value_enum)]
    trace: Option<TraceFormat>,
    #[arg(long)]
    no_occur_check: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Serialize)]
struct RunReport<'a> {
    status: Status,
    steps: u64,
    flounders: u64,
    solutions: Vec<String>,
    error: Option<&'a str>,
    monitor: Option<&'a MonitorReport>,
}

pub fn exit_code(o: &Outcome) -> u8 {
    if o.monitor.as_ref().is_some_and(|m| !m.is_clean()) {
        return EXIT_FAIL;
    }
    match o.status {
        Status::Success | Status::Failure => EXIT_PASS,
        Status::LimitExceeded => EXIT_LIMIT,
        Status::Floundered | Status::InstantiationError | Status::TypeError => EXIT_FAIL,
    }
}

pub fn cmd(a: RunArgs) -> Result<u8, InputError> {
    let prog = load(&a.file)?;
    let query = parse_query_arg(&a.query)?;
    let declared = prog.mode_names().next().is_some();
    let mode = if declared || a.mode.is_some() { Some(select_modes(&prog, a.mode.as_deref(), false)?.remove(0)) } else { None };
    let rule = match a.rule {
        Rule::LeftBased => SelectionRule::LeftBased(a.wake),
        Rule::Ld => SelectionRule::Ld,
        Rule::Random => SelectionRule::Random(a.seed),
    };
    let opts = RunOptions {
        rule,
        limits: Limits { steps: a.steps, solutions: a.solutions.map(|n| n as usize) },
        trace: a.trace.is_some(),
        no_occur_check: a.no_occur_check,
        mode: mode.clone(),
        ..RunOptions::default()
    };
    let outcome = match a.monitor {
        None => run(&prog, &query, &opts),
        Some(kind) => {
            let mode = mode.unwrap_or_else(|| blockcheck::parser::DEFAULT_MODE.to_string());
            let waivers = if a.no_waivers { Vec::new() } else { waiver_pairs(&head_linearity_waivers(&prog, &mode, &[&query])) };
            let cfg = MonitorConfig { kind, mode, waivers };
            match monitor(&prog, &query, &cfg, &opts) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("monitor refused: {e}");
                    return Ok(EXIT_FAIL);
                }
            }
        }
    };

    if let Some(tf) = a.trace {
        for s in outcome.trace.as_deref().unwrap_or_default() {
            match tf {
                TraceFormat::Text => println!("{s}"),
                TraceFormat::Jsonl => println!("{}", serde_json::to_string(s).expect("trace steps serialize")),
            }
        }
    }
    let report = RunReport {
        status: outcome.status,
        steps: outcome.steps,
        flounders: outcome.flounders,
        solutions: outcome.solutions.iter().map(|s| s.to_string()).collect(),
        error: outcome.error.as_deref(),
        monitor: outcome.monitor.as_ref(),
    };
    match a.format {
        Format::Json => print_json(&report),
        Format::Text => {
            for (i, s) in report.solutions.iter().enumerate() {
                println!("answer {}: {s}", i + 1);
            }
            if let Some(e) = report.error {
                println!("error: {e}");
            }
            println!("status: {} ({} steps)", report.status, report.steps);
            if let Some(m) = report.monitor {
                println!(
                    "monitor {}: {} checked, {} unchecked, {} violations, {} breaks",
                    m.condition,
                    m.checked_steps,
                    m.unchecked_steps,
                    m.violations.len(),
                    m.breaks.len()
                );
                for v in &m.violations {
                    println!("  violation at step {} ({}): {} {}", v.step, v.check, v.clause, v.detail);
                }
            }
        }
    }
    Ok(exit_code(&outcome))
}
