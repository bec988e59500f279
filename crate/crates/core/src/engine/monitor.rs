//! Runtime checks of the persistence properties: after every step the
//! resolvent must satisfy the condition under the derived permutation, and
//! the unifier must leave the protected variables alone.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::{Engine, Outcome, RunOptions, Undo, PI, TEXT, HEAD};
use crate::modes::{bound_free, BoundFree, Checker, Kind};
use crate::program::Program;
use crate::term::{fmt_query, Atom, Permutation, Var};

#[derive(Clone, Debug)]
pub struct MonitorConfig {
    pub kind: Kind,
    pub mode: String,
    /// Repeated head input variables that are accepted as if the head were input-linear.
    pub waivers: Vec<(usize, Var)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonitorViolation {
    pub step: u64,
    /// `resolvent`, `output-domain`, `selected-input-domain` or `consumer-domain`.
    pub check: String,
    pub clause: String,
    pub selected: String,
    pub detail: String,
    pub query: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MonitorReport {
    pub condition: String,
    pub checked_steps: u64,
    /// Steps where a precondition of the persistence property did not hold,
    /// or that descend from such a step.
    pub unchecked_steps: u64,
    pub violations: Vec<MonitorViolation>,
    /// Resolvents that lost the condition after a step outside the preconditions.
    pub breaks: Vec<MonitorViolation>,
}

impl MonitorReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub(super) struct State<'a> {
    cfg: MonitorConfig,
    checker: Checker<'a>,
    bf: BoundFree,
    input_linear: Vec<bool>,
    consumer_pairs: bool,
    pub(super) tracked: bool,
    pub(super) report: MonitorReport,
}

pub(super) struct Pre {
    precondition: Result<(), String>,
    clause: String,
    selected: Atom,
    sel_inputs: BTreeSet<Var>,
    others_out: BTreeSet<Var>,
    body_out: BTreeSet<Var>,
    earlier: BTreeSet<Var>,
}

/// Head input variables repeated without a waiver.
fn head_input_linear(prog: &Program, mode: &str, idx: usize, waivers: &[(usize, Var)]) -> bool {
    let c = &prog.clauses[idx];
    let Ok(m) = prog.mode_of(mode, &c.head.pred()) else { return false };
    let mut vs = Vec::new();
    m.inputs().for_each(|i| c.head.args[i].collect_vars(&mut vs));
    let mut seen = BTreeSet::new();
    vs.into_iter().all(|v| seen.insert(v.clone()) || waivers.iter().any(|(ci, w)| *ci == idx && *w == v))
}

/// Runs `query` under the monitor. The program must satisfy the condition
/// statically and the query must have a witness permutation.
pub fn monitor(prog: &Program, query: &[Atom], cfg: &MonitorConfig, opts: &RunOptions) -> Result<Outcome, String> {
    let checker = Checker::new(prog, &cfg.mode);
    let verdict = checker.check_program(cfg.kind);
    if !verdict.holds {
        let why = verdict.violations.first().map(|v| v.to_string()).unwrap_or_default();
        return Err(format!("program is not {} in mode {}: {why}", cfg.kind, cfg.mode));
    }
    let pi = checker.check_query(cfg.kind, query).map_err(|e| format!("query is not {}: {e}", cfg.kind))?;
    let clause_orders: HashMap<usize, Permutation> =
        verdict.witnesses.iter().filter_map(|w| w.index.map(|i| (i, w.permutation.clone()))).collect();
    let input_linear: Vec<bool> = (0..prog.clauses.len()).map(|i| head_input_linear(prog, &cfg.mode, i, &cfg.waivers)).collect();
    let consumer_pairs =
        cfg.kind == Kind::Robustly && input_linear.iter().all(|&b| b) && checker.input_selectability(&[]).holds;
    let run_opts = RunOptions { mode: Some(cfg.mode.clone()), query_order: Some(pi), clause_orders, ..opts.clone() };
    let state = State {
        cfg: cfg.clone(),
        bf: bound_free(prog, &cfg.mode),
        checker,
        input_linear,
        consumer_pairs,
        tracked: true,
        report: MonitorReport { condition: cfg.kind.name().to_string(), ..Default::default() },
    };
    let mut e = Engine::new(prog, query, &run_opts, Some(state));
    e.search();
    Ok(e.finish())
}

impl Engine<'_> {
    fn vars_at(&self, a: &Atom, positions: impl Iterator<Item = usize>, out: &mut BTreeSet<Var>) {
        for i in positions {
            out.extend(self.resolve(&a.args[i]).vars());
        }
    }

    pub(super) fn monitor_pre(&self, k: usize, body: Option<&[Atom]>, clause: Option<usize>) -> Option<Pre> {
        let m = self.monitor.as_ref()?;
        let kind = m.cfg.kind;
        let selected = self.resolve_atom(&self.nodes[k].atom);
        let p = selected.pred();
        let label = match clause {
            Some(ci) => self.prog.clause_label(ci),
            None => p.to_string(),
        };
        let mut pre = Pre {
            precondition: Ok(()),
            clause: label,
            selected,
            sel_inputs: BTreeSet::new(),
            others_out: BTreeSet::new(),
            body_out: BTreeSet::new(),
            earlier: BTreeSet::new(),
        };
        if !m.tracked {
            pre.precondition = Err("query no longer tracked".into());
            return Some(pre);
        }
        let Ok(mode) = self.prog.mode_of(&m.cfg.mode, &p) else {
            pre.precondition = Err(format!("no mode for {p}"));
            return Some(pre);
        };
        if kind != Kind::Well && clause.is_some_and(|ci| !m.input_linear[ci]) {
            pre.precondition = Err(format!("{} is not input-linear", pre.clause));
        }
        if matches!(kind, Kind::Simply | Kind::Robustly) {
            if let Some(i) = mode.inputs().find(|&i| m.bf.is_bound(&p, i) && pre.selected.args[i].is_var()) {
                pre.precondition = Err(format!("selected atom is variable at bound input position {}", i + 1));
            }
        }
        self.vars_at(&pre.selected, mode.inputs(), &mut pre.sel_inputs);
        if kind == Kind::Simply {
            let mut n = self.next(TEXT, HEAD);
            while n != HEAD {
                if n != k {
                    let a = &self.nodes[n].atom;
                    if let Ok(md) = self.prog.mode_of(&m.cfg.mode, &a.pred()) {
                        self.vars_at(a, md.outputs(), &mut pre.others_out);
                    }
                }
                n = self.next(TEXT, n);
            }
            for b in body.unwrap_or(&[]) {
                if let Ok(md) = self.prog.mode_of(&m.cfg.mode, &b.pred()) {
                    md.outputs().for_each(|i| pre.body_out.extend(b.args[i].vars()));
                }
            }
        }
        if m.consumer_pairs {
            let mut n = self.next(PI, HEAD);
            while n != HEAD && n != k {
                pre.earlier.extend(self.resolve_atom(&self.nodes[n].atom).vars());
                n = self.next(PI, n);
            }
        }
        Some(pre)
    }

    /// The resolvent in textual order with its permutation.
    fn resolvent(&self) -> (Vec<Atom>, Permutation) {
        let text = self.text_nodes();
        let mut pi_pos = HashMap::new();
        let mut n = self.next(PI, HEAD);
        let mut i = 1;
        while n != HEAD {
            pi_pos.insert(n, i);
            n = self.next(PI, n);
            i += 1;
        }
        let atoms = text.iter().map(|&n| self.resolve_atom(&self.nodes[n].atom)).collect();
        let image = text.iter().map(|n| pi_pos[n]).collect();
        (atoms, Permutation::new(image).expect("π list covers the query"))
    }

    pub(super) fn monitor_post(&mut self, _k: usize, pre: Option<Pre>, mark: usize) {
        let Some(pre) = pre else { return };
        let step = self.steps;
        let Some(m) = self.monitor.as_ref() else { return };
        if !m.tracked {
            self.monitor.as_mut().expect("monitor present").report.unchecked_steps += 1;
            return;
        }
        let kind = m.cfg.kind;
        let dom: BTreeSet<Var> = self.trail[mark..]
            .iter()
            .filter_map(|u| match u {
                Undo::Bind(v) => Some(v.clone()),
                _ => None,
            })
            .collect();
        let (atoms, pi) = self.resolvent();
        let query = format!("{} under {pi}", fmt_query(&atoms));
        let mk = |check: &str, detail: String| MonitorViolation {
            step,
            check: check.to_string(),
            clause: pre.clause.clone(),
            selected: pre.selected.to_string(),
            detail,
            query: query.clone(),
        };
        let mut found = Vec::new();
        let list = |vs: BTreeSet<&Var>| vs.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
        if pre.precondition.is_ok() {
            if kind == Kind::Simply {
                let hit: BTreeSet<&Var> = dom.iter().filter(|v| pre.others_out.contains(v) || pre.body_out.contains(v)).collect();
                if !hit.is_empty() {
                    found.push(mk("output-domain", format!("unifier binds output variables {}", list(hit))));
                }
            }
            if kind == Kind::Robustly {
                let hit: BTreeSet<&Var> = dom.intersection(&pre.sel_inputs).collect();
                if !hit.is_empty() {
                    found.push(mk("selected-input-domain", format!("unifier binds selected input variables {}", list(hit))));
                }
                let hit: BTreeSet<&Var> = dom.intersection(&pre.earlier).collect();
                if !hit.is_empty() {
                    found.push(mk("consumer-domain", format!("unifier binds variables of earlier atoms {}", list(hit))));
                }
            }
        }
        let kept = m.checker.check_with(kind, None, &atoms, &pi);
        let lost = kept.is_err();
        let m = self.monitor.as_mut().expect("monitor present");
        match (&pre.precondition, kept) {
            (Ok(()), Ok(())) => {}
            (Ok(()), Err(e)) => found.push(mk("resolvent", e)),
            (Err(why), Err(e)) => m.report.breaks.push(mk("resolvent", format!("{e} (after a step where {why})"))),
            (Err(_), Ok(())) => {}
        }
        if pre.precondition.is_ok() {
            m.report.checked_steps += 1;
        } else {
            m.report.unchecked_steps += 1;
        }
        m.report.violations.extend(found);
        if lost {
            m.tracked = false;
            self.trail.push(Undo::Tracked(true));
        }
    }
}
