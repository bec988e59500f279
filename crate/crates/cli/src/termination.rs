use blockcheck::builtins::{head_linearity_waivers, waiver_pairs};
use blockcheck::termination::{termination_verdict, LevelMapping, TerminationOptions, TerminationReport};
use clap::Args;

use crate::{load, par_map, print_json, query_arg, queries_for, select_modes, Common, Format, InputError, EXIT_FAIL, EXIT_PASS};

#[derive(Args, Debug)]
pub struct TerminationArgs {
    #[command(flatten)]
    common: Common,
    /// Level mapping hint such as `len_aux/3=listlen:1` (positions 1-based, terms joined by `+`).
    #[arg(long = "hint")]
    hints: Vec<String>,
    /// Also print the reordered program whose LD-termination an approach reduces to.
    #[arg(long)]
    emit_corresponding: bool,
}

pub fn cmd(a: TerminationArgs) -> Result<u8, InputError> {
    let c = &a.common;
    let prog = load(&c.file)?;
    let modes = select_modes(&prog, c.mode.as_deref(), c.all_modes)?;
    let query = query_arg(c.query.as_deref())?;
    let mut hints = LevelMapping::default();
    for h in &a.hints {
        let (p, es) = LevelMapping::parse_hint(h).map_err(InputError)?;
        if !prog.is_defined(&p) {
            return Err(InputError(format!("hint for undefined predicate {p}")));
        }
        hints.entries.insert(p, es);
    }
    let reports: Vec<TerminationReport> = par_map(&modes, |m| {
        let waivers = if c.no_waivers {
            Vec::new()
        } else {
            let qs = queries_for(&prog, m, &query);
            let refs: Vec<&[blockcheck::Atom]> = qs.iter().map(|q| q.as_slice()).collect();
            waiver_pairs(&head_linearity_waivers(&prog, m, &refs))
        };
        let opts = TerminationOptions { hints: hints.clone(), waivers, exempt_max: Vec::new() };
        termination_verdict(&prog, m, query.as_deref(), &opts)
    });
    match c.format {
        Format::Json => print_json(&reports),
        Format::Text => {
            for r in &reports {
                println!("{}", c.file.display());
                println!("{r}");
                match (r.conclusion, r.theorem) {
                    (Some(a), Some(t)) => println!("result: terminating ({a}, {t})"),
                    (Some(a), None) => println!("result: terminating ({a})"),
                    _ => println!("result: not certified"),
                }
                if a.emit_corresponding {
                    for ap in &r.approaches {
                        if let Some(ob) = &ap.obligation {
                            println!("% LD program for {} ({}):", ap.approach, if ob.discharged { "terminates" } else { "open" });
                            print!("{}", ob.program);
                        }
                    }
                }
            }
        }
    }
    Ok(if reports.iter().all(|r| r.terminating()) { EXIT_PASS } else { EXIT_FAIL })
}
