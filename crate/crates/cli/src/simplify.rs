use std::collections::BTreeMap;
use std::path::PathBuf;

use blockcheck::builtins::omit_blocks_by_safety;
use blockcheck::engine::{run, Limits, RunOptions, SelectionRule, Status, WakePolicy};
use blockcheck::{emit_program, Atom, BlockDecl, Program};
use clap::Args;
use serde::Serialize;

use crate::{load, print_json, query_arg, queries_for, select_modes, Format, InputError, EXIT_FAIL, EXIT_PASS};

#[derive(Args, Debug)]
pub struct SimplifyArgs {
    /// Program file.
    file: PathBuf,
    /// Mode name; defaults to the first declared mode.
    #[arg(long)]
    mode: Option<String>,
    /// Query the simplification must preserve; defaults to the stored queries of the mode.
    #[arg(long)]
    query: Option<String>,
    /// Write the program here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Step limit for each validation run. Lower than the engine default
    /// because both traces are held in memory.
    #[arg(long, default_value_t = VALIDATION_STEPS, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Serialize)]
struct Removed {
    pred: String,
    justification: String,
}

#[derive(Serialize)]
struct Validation {
    query: String,
    wake: WakePolicy,
    status: Status,
    steps: usize,
    identical: bool,
}

#[derive(Serialize)]
struct Report {
    mode: String,
    removed: Vec<Removed>,
    /// Why nothing could be removed, when the analysis did not apply.
    refused: Option<String>,
    validation: Vec<Validation>,
    program: String,
}

const VALIDATION_STEPS: u64 = 10_000;

const POLICIES: [WakePolicy; 3] = [WakePolicy::NewlyWokenFirst, WakePolicy::LatestSuspendedFirst, WakePolicy::LeftmostWaitingFirst];

/// Runs each query on both programs under every wake policy and compares traces step for step.
fn validate(before: &Program, after: &Program, queries: &[Vec<Atom>], steps: u64) -> Vec<Validation> {
    let mut out = Vec::new();
    for q in queries {
        for wake in POLICIES {
            let opts = RunOptions {
                trace: true,
                limits: Limits { steps, solutions: None },
                ..RunOptions::with_rule(SelectionRule::LeftBased(wake))
            };
            let a = run(before, q, &opts);
            let b = run(after, q, &opts);
            let (ta, tb) = (a.trace.unwrap_or_default(), b.trace.unwrap_or_default());
            out.push(Validation {
                query: blockcheck::term::fmt_query(q),
                wake,
                status: a.status,
                steps: ta.len(),
                identical: ta == tb && a.status == b.status,
            });
        }
    }
    out
}

pub fn cmd(a: SimplifyArgs) -> Result<u8, InputError> {
    let src = std::fs::read_to_string(&a.file).map_err(|e| InputError(format!("{}: {e}", a.file.display())))?;
    let prog = load(&a.file)?;
    let mode = select_modes(&prog, a.mode.as_deref(), false)?.remove(0);
    let given = query_arg(a.query.as_deref())?;
    let queries = queries_for(&prog, &mode, &given);
    let refs: Vec<&[Atom]> = queries.iter().map(|q| q.as_slice()).collect();

    let (removed, refused) = match omit_blocks_by_safety(&prog, &mode, &refs) {
        Ok(ps) => (ps, None),
        Err(e) => (Vec::new(), Some(e)),
    };
    let mut simpler = prog.clone();
    for (p, _) in &removed {
        simpler = simpler.with_block(p, BlockDecl::empty());
    }
    let validation = if removed.is_empty() { Vec::new() } else { validate(&prog, &simpler, &queries, a.steps) };

    let mut text = String::new();
    if removed.is_empty() {
        // nothing to change: the source is passed through untouched
        text.push_str(&src);
    } else {
        for (p, why) in &removed {
            text.push_str(&format!("% removed block declaration of {p}: {why}\n"));
        }
        for v in &validation {
            let verdict = if v.identical { "identical traces" } else { "TRACES DIFFER" };
            text.push_str(&format!("% validated {} ({}): {verdict}, {} steps, {}\n", v.query, wake_name(v.wake), v.steps, v.status));
        }
        if queries.is_empty() {
            text.push_str("% no query to validate against\n");
        }
        text.push_str(&emit_program(&simpler, None, &BTreeMap::new())?);
    }

    let report = Report {
        mode,
        removed: removed.iter().map(|(p, j)| Removed { pred: p.to_string(), justification: j.clone() }).collect(),
        refused,
        validation,
        program: text,
    };
    if let Some(path) = &a.output {
        std::fs::write(path, &report.program).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    }
    match a.format {
        Format::Json => print_json(&report),
        Format::Text if a.output.is_none() => print!("{}", report.program),
        Format::Text => {
            for r in &report.removed {
                println!("removed block declaration of {}", r.pred);
            }
        }
    }
    if let (Format::Text, Some(why)) = (a.format, &report.refused) {
        eprintln!("no block declaration removed: {why}");
    }
    Ok(if report.validation.iter().all(|v| v.identical) { EXIT_PASS } else { EXIT_FAIL })
}

fn wake_name(w: WakePolicy) -> &'static str {
    match w {
        WakePolicy::NewlyWokenFirst => "newly-woken-first",
        WakePolicy::LatestSuspendedFirst => "latest-suspended-first",
        WakePolicy::LeftmostWaitingFirst => "leftmost-waiting-first",
    }
}
