use blockcheck::builtins::{builtin_safety, check_bground, head_linearity_waivers, spec_by_name, waiver_pairs};
use blockcheck::modes::ConditionVerdict;
use blockcheck::{Pred, Program};
use clap::Args;

use crate::{load, par_map, print_json, query_arg, queries_for, select_modes, Common, Format, InputError, EXIT_FAIL, EXIT_PASS};

#[derive(Args, Debug)]
pub struct ErrorsArgs {
    #[command(flatten)]
    common: Common,
    /// Predicates certified by the B-ground check, e.g. `<,is/2,=\=`. Without
    /// it, every arithmetic built-in the program uses is checked.
    #[arg(long, value_delimiter = ',')]
    bset: Option<Vec<String>>,
}

fn parse_pred(prog: &Program, s: &str) -> Result<Pred, InputError> {
    let s = s.trim();
    if let Some((name, arity)) = s.rsplit_once('/') {
        if let Ok(n) = arity.parse::<usize>() {
            let p = Pred::new(name, n);
            if prog.is_defined(&p) || spec_by_name(name, n).is_some() {
                return Ok(p);
            }
            return Err(InputError(format!("--bset: unknown predicate {p}")));
        }
    }
    let mut found: Vec<Pred> = prog.all_preds().into_iter().filter(|p| &*p.name == s).collect();
    found.dedup();
    match found.as_slice() {
        [p] => Ok(p.clone()),
        [] => Err(InputError(format!("--bset: unknown predicate `{s}`"))),
        _ => Err(InputError(format!("--bset: `{s}` is ambiguous, give name/arity"))),
    }
}

pub fn cmd(a: ErrorsArgs) -> Result<u8, InputError> {
    let c = &a.common;
    let prog = load(&c.file)?;
    let modes = select_modes(&prog, c.mode.as_deref(), c.all_modes)?;
    let query = query_arg(c.query.as_deref())?;
    let bset: Option<Vec<Pred>> = a.bset.as_ref().map(|v| v.iter().map(|s| parse_pred(&prog, s)).collect()).transpose()?;
    let verdicts: Vec<ConditionVerdict> = par_map(&modes, |m| {
        let waivers = if c.no_waivers {
            Vec::new()
        } else {
            let qs = queries_for(&prog, m, &query);
            let refs: Vec<&[blockcheck::Atom]> = qs.iter().map(|q| q.as_slice()).collect();
            waiver_pairs(&head_linearity_waivers(&prog, m, &refs))
        };
        match &bset {
            Some(b) => check_bground(&prog, m, b, &waivers, query.as_deref()),
            None => builtin_safety(&prog, m, &waivers, query.as_deref()),
        }
    });
    match c.format {
        Format::Json => print_json(&verdicts),
        Format::Text => {
            for v in &verdicts {
                println!("{}", c.file.display());
                print!("{v}");
                println!("result: {}", if v.holds { "certified" } else { "warning: built-in errors not excluded" });
            }
        }
    }
    Ok(if verdicts.iter().all(|v| v.holds) { EXIT_PASS } else { EXIT_FAIL })
}
