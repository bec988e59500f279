use blockcheck::builtins::{head_linearity_waivers, waiver_pairs, Waiver};
use blockcheck::modes::{BoundFree, Checker, ConditionVerdict, Kind};
use blockcheck::{Atom, Program};
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::{load, par_map, print_json, query_arg, select_modes, Common, Format, InputError, EXIT_FAIL, EXIT_PASS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Condition {
    Nicely,
    Well,
    Simply,
    Robustly,
    InputLinear,
    Selectability,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Conditions that decide the exit code (all when omitted).
    #[arg(long, value_enum, value_delimiter = ',')]
    require: Vec<Condition>,
}

#[derive(Serialize)]
struct QueryVerdict {
    condition: &'static str,
    holds: bool,
    detail: String,
}

#[derive(Serialize)]
struct ModeReport {
    mode: String,
    holds: bool,
    conditions: Vec<ConditionVerdict>,
    query: Vec<QueryVerdict>,
    waivers: Vec<Waiver>,
    bound_free: BoundFree,
}

fn condition_of(c: Condition) -> usize {
    match c {
        Condition::Nicely => 0,
        Condition::Well => 1,
        Condition::Simply => 2,
        Condition::Robustly => 3,
        Condition::InputLinear => 4,
        Condition::Selectability => 5,
    }
}

fn report(prog: &Program, mode: &str, query: Option<&[Atom]>, no_waivers: bool, require: &[Condition]) -> ModeReport {
    let ch = Checker::new(prog, mode);
    let queries: Vec<&[Atom]> = query.into_iter().collect();
    let waivers = if no_waivers { Vec::new() } else { head_linearity_waivers(prog, mode, &queries) };
    let mut conditions: Vec<ConditionVerdict> = Kind::ALL.iter().map(|&k| ch.check_program(k)).collect();
    conditions.push(ch.input_linear(&waiver_pairs(&waivers)));
    conditions.push(ch.input_selectability(&[]));
    let query: Vec<QueryVerdict> = match query {
        None => Vec::new(),
        Some(q) => Kind::ALL
            .iter()
            .map(|&k| match ch.check_query(k, q) {
                Ok(pi) => QueryVerdict { condition: k.name(), holds: true, detail: format!("witness {pi}") },
                Err(e) => QueryVerdict { condition: k.name(), holds: false, detail: e },
            })
            .collect(),
    };
    let required: Vec<usize> = if require.is_empty() { (0..conditions.len()).collect() } else { require.iter().map(|&c| condition_of(c)).collect() };
    // a given query must meet each required permutation condition too
    let holds = required.iter().all(|&i| conditions[i].holds && query.get(i).is_none_or(|q| q.holds));
    ModeReport { mode: mode.to_string(), holds, conditions, query, waivers, bound_free: ch.bf }
}

fn print_text(file: &str, r: &ModeReport) {
    println!("{file} [{}]", r.mode);
    for c in &r.conditions {
        print!("{c}");
    }
    for q in &r.query {
        println!("query {}: {} ({})", q.condition, if q.holds { "holds" } else { "fails" }, q.detail);
    }
    for w in &r.waivers {
        println!("waiver {} {}: case {} ({})", w.label, w.var, w.case, w.justification);
    }
    println!("bound/free:");
    for (p, bs) in &r.bound_free.table {
        let cols: Vec<&str> = bs.iter().map(|&b| if b { "bound" } else { "free" }).collect();
        println!("  {p}: {}", cols.join(" "));
    }
    println!("result: {}", if r.holds { "pass" } else { "fail" });
}

pub fn cmd(a: CheckArgs) -> Result<u8, InputError> {
    let c = &a.common;
    let prog = load(&c.file)?;
    let modes = select_modes(&prog, c.mode.as_deref(), c.all_modes)?;
    let query = query_arg(c.query.as_deref())?;
    let reports = par_map(&modes, |m| report(&prog, m, query.as_deref(), c.no_waivers, &a.require));
    match c.format {
        Format::Json => print_json(&reports),
        Format::Text => {
            let file = c.file.display().to_string();
            for r in &reports {
                print_text(&file, r);
            }
        }
    }
    Ok(if reports.iter().all(|r| r.holds) { EXIT_PASS } else { EXIT_FAIL })
}
