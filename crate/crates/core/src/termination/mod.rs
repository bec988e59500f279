//! Termination of left-based derivations: reduction to LD-termination when
//! left-based and LD derivations coincide or the program is non-speculative,
//! and the robustness-based well-fed criterion.

pub mod graph;
pub mod norms;

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;

pub use graph::DependencyGraph;
pub use norms::{norm_of, norm_value, norms_for, LevelMapping, Norm, NormCtx, Relation};

use crate::builtins::{self, BuiltinClass};
use crate::modes::{bound_free, Checker, ConditionVerdict, Kind, Violation, Witness};
use crate::parser::emit_program;
use crate::program::Program;
use crate::term::{unify, Atom, BlockMark, Clause, Permutation, Pred, Term, Var};
use crate::types::{ProdHead, TypeDef};

/// Inputs that are not derived from the program itself.
#[derive(Clone, Debug, Default)]
pub struct TerminationOptions {
    pub hints: LevelMapping,
    /// Repeated head-input variables to tolerate, by clause index.
    pub waivers: Vec<(usize, Var)>,
    /// Predicates exempt from the second selectability condition.
    pub exempt_max: Vec<Pred>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Robust {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Robust {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Robust::Yes => "yes",
            Robust::No => "no",
            Robust::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RobustEntry {
    pub pred: Pred,
    pub robust: Robust,
    pub justification: String,
}

#[derive(Clone, Debug, Default)]
pub struct RobustTable {
    pub entries: IndexMap<Pred, RobustEntry>,
}

impl RobustTable {
    pub fn is_robust(&self, p: &Pred) -> bool {
        self.entries.get(p).is_some_and(|e| e.robust == Robust::Yes)
    }

    pub fn robust_preds(&self) -> Vec<Pred> {
        self.entries.values().filter(|e| e.robust == Robust::Yes).map(|e| e.pred.clone()).collect()
    }
}

pub fn dependency_graph(prog: &Program) -> DependencyGraph {
    DependencyGraph::new(prog)
}

fn scc_clauses<'p>(prog: &'p Program, scc: &[Pred]) -> Vec<&'p Clause> {
    scc.iter().flat_map(|p| prog.clauses_of(p).map(|(_, c)| c)).collect()
}

/// Whether all clauses defining the component decrease on calls back into
/// it for every instantiation of correctly typed inputs.
pub fn well_recurrent(prog: &Program, mode: &str, scc: &[Pred], lm: &LevelMapping) -> Result<(), String> {
    NormCtx::new(prog, mode).check_decrease(&scc_clauses(prog, scc), scc, lm, false)
}

/// Preconditions of the robustness lemma, as violations.
fn robust_preconditions(chk: &Checker, opts: &TerminationOptions) -> Vec<Violation> {
    let mut out = Vec::new();
    let rt = chk.check_program(Kind::Robustly);
    if !rt.holds {
        out.extend(rt.violations);
    }
    out.extend(chk.input_linear(&opts.waivers).violations);
    out.extend(chk.input_selectability(&opts.exempt_max).violations);
    out
}

/// Bottom-up over the components: robust if everything strictly below is
/// robust and the component's clauses are well-recurrent.
pub fn robust_predicates(prog: &Program, mode: &str, opts: &TerminationOptions) -> RobustTable {
    let graph = DependencyGraph::new(prog);
    let chk = Checker::new(prog, mode);
    let pre = robust_preconditions(&chk, opts);
    let mut table = RobustTable::default();
    let ctx = NormCtx::new(prog, mode);
    for (i, scc) in graph.sccs().iter().enumerate() {
        let (robust, justification) = if scc.iter().all(|p| prog.is_builtin(p)) {
            (Robust::Yes, "built-in".to_string())
        } else if let Some(v) = pre.first() {
            (Robust::Unknown, format!("preconditions fail: {v}"))
        } else if let Some(q) = graph.successors_outside(i).into_iter().find(|q| !table.is_robust(q)) {
            (Robust::No, format!("depends on {q}, which is not shown robust"))
        } else if !graph.is_recursive(i) {
            (Robust::Yes, "no recursion".to_string())
        } else {
            match ctx.find_level_mapping(&scc_clauses(prog, scc), scc, &opts.hints, false) {
                Ok(lm) => (Robust::Yes, format!("well-recurrent with {lm}")),
                Err(e) => (Robust::No, e),
            }
        };
        for p in scc {
            table.entries.insert(p.clone(), RobustEntry { pred: p.clone(), robust, justification: justification.clone() });
        }
    }
    // report in program order
    let order = prog.all_preds();
    table.entries.sort_by(|a, _, b, _| order.iter().position(|p| p == a).cmp(&order.iter().position(|p| p == b)));
    table
}

/// Every atom is in a safe position of its witness or has an entirely
/// robust cone.
fn fed_atoms(graph: &DependencyGraph, robust: &RobustTable, at: &str, body: &[Atom], pi: &Permutation, v: &mut ConditionVerdict) {
    for (i, a) in body.iter().enumerate() {
        if pi.is_safe_position(i + 1) {
            continue;
        }
        if let Some(q) = graph.cone(&a.pred()).into_iter().find(|q| !robust.is_robust(q)) {
            v.fail(Violation {
                at: at.to_string(),
                reason: format!("atom {} `{a}` is in an unsafe position of {pi} and {q} is not robust", i + 1),
                positions: vec![i + 1],
            });
        }
    }
}

pub fn well_fed(prog: &Program, mode: &str, robust: &RobustTable, query: Option<&[Atom]>, opts: &TerminationOptions) -> ConditionVerdict {
    let graph = DependencyGraph::new(prog);
    let chk = Checker::new(prog, mode);
    let mut v = ConditionVerdict::new("well fed", mode);
    let rt = chk.check_program(Kind::Robustly);
    if !rt.holds {
        rt.violations.into_iter().for_each(|x| v.fail(x));
    }
    for x in chk.input_linear(&opts.waivers).violations.into_iter().chain(chk.input_selectability(&opts.exempt_max).violations) {
        v.fail(x);
    }
    for w in &rt.witnesses {
        let c = &prog.clauses[w.index.expect("program witnesses carry indices")];
        fed_atoms(&graph, robust, &w.clause, &c.body, &w.permutation, &mut v);
    }
    if let Some(q) = query {
        match chk.check_query(Kind::Robustly, q) {
            Ok(pi) => {
                fed_atoms(&graph, robust, "query", q, &pi, &mut v);
                v.witnesses.push(Witness { clause: "query".into(), index: None, permutation: pi });
            }
            Err(e) => v.fail(Violation::new("query", format!("not permutation robustly typed: {e}"))),
        }
    }
    if v.holds {
        v.witnesses.splice(0..0, rt.witnesses);
    } else {
        v.witnesses.clear();
    }
    v
}

/// Well typed in textual order, and no block declaration delays an atom whose
/// inputs of non-variable type are non-variable.
pub fn left_eq_ld(prog: &Program, mode: &str, query: Option<&[Atom]>) -> ConditionVerdict {
    let chk = Checker::new(prog, mode);
    let mut v = ConditionVerdict::new("left-based equals LD", mode);
    for (idx, c) in prog.clauses.iter().enumerate() {
        let label = prog.clause_label(idx);
        match chk.check_with(Kind::Well, Some(&c.head), &c.body, &Permutation::identity(c.body.len())) {
            Ok(()) => v.witnesses.push(Witness { clause: label, index: Some(idx), permutation: Permutation::identity(c.body.len()) }),
            Err(e) => v.fail(Violation::new(label, format!("not well typed in textual order: {e}"))),
        }
    }
    if let Some(q) = query {
        if let Err(e) = chk.check_with(Kind::Well, None, q, &Permutation::identity(q.len())) {
            v.fail(Violation::new("query", format!("not well typed in textual order: {e}")));
        }
    }
    for p in prog.preds.keys() {
        let (Ok(m), Ok(tys)) = (prog.mode_of(mode, p), prog.type_of(p)) else {
            v.fail(Violation::new(p.to_string(), "no mode or type declared"));
            continue;
        };
        // positions that may still be variable in an atom we must admit
        let may_var: Vec<bool> = (0..p.arity).map(|i| !m.is_input(i) || prog.type_table.is_variable_type(&tys[i])).collect();
        for pat in &prog.block(p).patterns {
            if pat.iter().zip(&may_var).all(|(b, mv)| *b == BlockMark::Any || *mv) {
                v.fail(Violation::new(
                    p.to_string(),
                    format!("{} delays atoms whose non-variable-type inputs are non-variable", crate::term::BlockDecl { patterns: vec![pat.clone()] }.fmt_for(&p.name)),
                ));
            }
        }
    }
    if !v.holds {
        v.witnesses.clear();
    }
    v
}

/// Shapes of simply typed atoms, one list of alternatives per position.
fn shapes(prog: &Program, mode: &str, p: &Pred) -> Vec<Vec<Term>> {
    let bf = bound_free(prog, mode);
    let (Ok(m), Ok(tys)) = (prog.mode_of(mode, p), prog.type_of(p)) else { return Vec::new() };
    let mut fresh = 0;
    let mut var = || {
        fresh += 1;
        Term::Var(Var::new(&format!("_S{fresh}")))
    };
    (0..p.arity)
        .map(|i| {
            if !m.is_input(i) || !bf.is_bound(p, i) {
                return vec![var()];
            }
            match prog.type_table.get(&tys[i]) {
                Ok(TypeDef::Grammar(ps)) => ps
                    .iter()
                    .map(|pr| match &pr.head {
                        ProdHead::Int(k) => Term::Int(*k),
                        ProdHead::Functor(f) => Term::App(f.clone(), (0..pr.args.len()).map(|_| var()).collect::<Vec<_>>().into()),
                    })
                    .collect(),
                Ok(TypeDef::Int | TypeDef::Num) => {
                    let mut ks: Vec<i64> = prog
                        .clauses_of(p)
                        .filter_map(|(_, c)| if let Term::Int(k) = c.head.args[i] { Some(k) } else { None })
                        .collect();
                    ks.sort();
                    ks.dedup();
                    let other = ks.last().map_or(0, |k| k + 1);
                    ks.push(other);
                    ks.into_iter().map(Term::Int).collect()
                }
                _ => vec![var()],
            }
        })
        .collect()
}

/// Renames variables to A, B, ... in order of occurrence.
fn readable(a: &Atom) -> Atom {
    let mut names: Vec<Var> = Vec::new();
    a.map_vars(&mut |v| {
        let k = names.iter().position(|w| w == v).unwrap_or_else(|| {
            names.push(v.clone());
            names.len() - 1
        });
        let name = if k < 26 { ((b'A' + k as u8) as char).to_string() } else { format!("V{k}") };
        Term::var(&name)
    })
}

fn speculative_builtin(p: &Pred) -> Option<&'static str> {
    let spec = builtins::spec(p)?;
    match (spec.class, spec.name) {
        (BuiltinClass::Eval, _) => None,
        (_, "<") => Some("0 < 0"),
        (_, ">") => Some("0 > 0"),
        (_, "=<") => Some("1 =< 0"),
        (_, "=\\=") => Some("0 =\\= 0"),
        _ => Some("a = b"),
    }
}

/// Every simply typed atom unifies with some clause head (built-ins: with some
/// conceptual fact). Requires a permutation simply typed, input-linear program.
pub fn non_speculative(prog: &Program, mode: &str, query: Option<&[Atom]>, opts: &TerminationOptions) -> ConditionVerdict {
    let chk = Checker::new(prog, mode);
    let mut v = ConditionVerdict::new("non-speculative", mode);
    let st = chk.check_program(Kind::Simply);
    st.violations.into_iter().for_each(|x| v.fail(x));
    chk.input_linear(&opts.waivers).violations.into_iter().for_each(|x| v.fail(x));
    if let Some(q) = query {
        if let Err(e) = chk.check_query(Kind::Simply, q) {
            v.fail(Violation::new("query", format!("not permutation simply typed: {e}")));
        }
    }
    for p in prog.all_preds() {
        if prog.is_builtin(&p) {
            if let Some(w) = speculative_builtin(&p) {
                v.fail(Violation::new(p.to_string(), format!("`{w}` is simply typed but has no fact")));
            }
            continue;
        }
        let alts = shapes(prog, mode, &p);
        let heads: Vec<Atom> = prog.clauses_of(&p).map(|(_, c)| c.with_generation(1).head).collect();
        let mut choice = vec![0usize; alts.len()];
        'outer: loop {
            let args: Vec<Term> = choice.iter().zip(&alts).map(|(&k, a)| a[k].clone()).collect();
            let shape = Atom::new(&p.name, args);
            if !heads.iter().any(|h| unify(&shape, h, true).is_ok()) {
                v.fail(Violation::new(p.to_string(), format!("`{}` is not unifiable with any clause head", readable(&shape))));
                break;
            }
            for (k, a) in choice.iter_mut().zip(&alts) {
                *k += 1;
                if *k < a.len() {
                    continue 'outer;
                }
                *k = 0;
            }
            break;
        }
    }
    if v.holds {
        v.witnesses = st.witnesses;
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Approach {
    #[serde(rename = "left=LD")]
    LeftEqLd,
    #[serde(rename = "non-speculative")]
    NonSpeculative,
    #[serde(rename = "well fed")]
    WellFed,
}

impl Approach {
    pub const ALL: [Approach; 3] = [Approach::LeftEqLd, Approach::NonSpeculative, Approach::WellFed];

    pub fn name(self) -> &'static str {
        match self {
            Approach::LeftEqLd => "left=LD",
            Approach::NonSpeculative => "non-speculative",
            Approach::WellFed => "well fed",
        }
    }

    /// The result the approach relies on.
    pub fn theorem(self) -> &'static str {
        match self {
            Approach::LeftEqLd => "every left-based derivation is an LD-derivation of the same program",
            Approach::NonSpeculative => {
                "an infinite left-based derivation implies an infinite LD-derivation of the corresponding simply typed program"
            }
            Approach::WellFed => "every left-based derivation of a well fed program and query is finite",
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// LD-termination of a reordered program, to be shown by decrease under
/// left-to-right execution.
#[derive(Clone, Debug, Serialize)]
pub struct Obligation {
    pub discharged: bool,
    pub level_mappings: Vec<String>,
    pub failures: Vec<String>,
    /// The program whose LD-derivations must be finite.
    pub program: String,
    #[serde(skip)]
    pub reordering: BTreeMap<usize, Permutation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproachReport {
    pub approach: Approach,
    pub preconditions: ConditionVerdict,
    pub obligation: Option<Obligation>,
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TerminationReport {
    pub mode: String,
    pub robust: Vec<RobustEntry>,
    pub approaches: Vec<ApproachReport>,
    pub conclusion: Option<Approach>,
    pub theorem: Option<&'static str>,
    pub relations: Vec<String>,
}

impl TerminationReport {
    pub fn terminating(&self) -> bool {
        self.conclusion.is_some()
    }

    pub fn approach(&self, a: Approach) -> &ApproachReport {
        self.approaches.iter().find(|r| r.approach == a).expect("all approaches are reported")
    }

    /// Approaches that certify termination on their own.
    pub fn certifying(&self) -> Vec<Approach> {
        self.approaches.iter().filter(|r| r.certified).map(|r| r.approach).collect()
    }
}

impl fmt::Display for TerminationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "termination [{}]", self.mode)?;
        for r in &self.robust {
            writeln!(f, "  robust {}: {} ({})", r.pred, r.robust, r.justification)?;
        }
        for a in &self.approaches {
            let status = if a.certified {
                "certified"
            } else if a.preconditions.holds {
                "reduced, LD obligation open"
            } else {
                "not applicable"
            };
            writeln!(f, "  {}: {status}", a.approach)?;
            for v in &a.preconditions.violations {
                writeln!(f, "    - {v}")?;
            }
            if let Some(o) = &a.obligation {
                for lm in &o.level_mappings {
                    writeln!(f, "    decrease: {lm}")?;
                }
                for e in &o.failures {
                    writeln!(f, "    open: {e}")?;
                }
            }
        }
        match self.conclusion {
            Some(a) => writeln!(f, "  conclusion: terminating via {a}: {}", a.theorem()),
            None => writeln!(f, "  conclusion: not certified"),
        }
    }
}

/// LD-termination of `prog` reordered by `reordering`, by decrease on every
/// recursive call using size relations of answers computed earlier.
pub fn ld_obligation(prog: &Program, mode: &str, reordering: &BTreeMap<usize, Permutation>, ctx: &NormCtx, hints: &LevelMapping) -> Obligation {
    let text = emit_program(prog, Some(mode), reordering).unwrap_or_else(|e| format!("% {e}"));
    let mut ob = Obligation { discharged: true, level_mappings: Vec::new(), failures: Vec::new(), program: text, reordering: reordering.clone() };
    let reordered = match prog.reorder(reordering) {
        Ok(p) => p,
        Err(e) => {
            ob.discharged = false;
            ob.failures.push(e.to_string());
            return ob;
        }
    };
    let local = NormCtx { prog: &reordered, mode: mode.to_string(), relations: ctx.relations.clone() };
    let graph = DependencyGraph::new(&reordered);
    for (i, scc) in graph.sccs().iter().enumerate() {
        if !graph.is_recursive(i) || scc.iter().all(|p| reordered.is_builtin(p)) {
            continue;
        }
        match local.find_level_mapping(&scc_clauses(&reordered, scc), scc, hints, true) {
            Ok(lm) => ob.level_mappings.push(lm.to_string()),
            Err(e) => {
                ob.discharged = false;
                ob.failures.push(format!("{}: {e}", scc.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")));
            }
        }
    }
    ob
}

fn reordering_of(v: &ConditionVerdict) -> BTreeMap<usize, Permutation> {
    v.witnesses.iter().filter_map(|w| Some((w.index?, w.permutation.clone()))).filter(|(_, p)| !p.is_identity()).collect()
}

/// Tries the three approaches in order and reports the first that certifies.
pub fn termination_verdict(prog: &Program, mode: &str, query: Option<&[Atom]>, opts: &TerminationOptions) -> TerminationReport {
    let graph = DependencyGraph::new(prog);
    let mut ctx = NormCtx::new(prog, mode);
    ctx.infer_relations(&graph);
    let robust = robust_predicates(prog, mode, opts);
    let chk = Checker::new(prog, mode);

    let mut approaches = Vec::new();
    for a in Approach::ALL {
        let (pre, reordering) = match a {
            Approach::LeftEqLd => (left_eq_ld(prog, mode, query), BTreeMap::new()),
            Approach::NonSpeculative => {
                let mut v = non_speculative(prog, mode, query, opts);
                chk.input_selectability(&opts.exempt_max).violations.into_iter().for_each(|x| v.fail(x));
                let r = reordering_of(&v);
                (v, r)
            }
            Approach::WellFed => {
                let v = well_fed(prog, mode, &robust, query, opts);
                let r = reordering_of(&v);
                (v, r)
            }
        };
        let obligation = pre.holds.then(|| ld_obligation(prog, mode, &reordering, &ctx, &opts.hints));
        let certified = obligation.as_ref().is_some_and(|o| o.discharged);
        approaches.push(ApproachReport { approach: a, preconditions: pre, obligation, certified });
    }
    let conclusion = approaches.iter().find(|r| r.certified).map(|r| r.approach);
    let mut relations: Vec<String> = Vec::new();
    for p in prog.preds.keys() {
        relations.extend(ctx.relations.get(p).into_iter().flatten().map(|r| r.to_string()));
    }
    TerminationReport {
        mode: mode.to_string(),
        robust: robust.entries.into_values().collect(),
        approaches,
        conclusion,
        theorem: conclusion.map(|a| a.theorem()),
        relations,
    }
}
