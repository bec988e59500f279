//! Built-in predicates: the fixed table, native evaluation and the analyses
//! that decide when their block declarations can be dropped.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::Serialize;

use crate::modes::{BoundFree, Checker, ConditionVerdict, Kind, Violation};
use crate::program::{Dir, Mode, Program};
use crate::term::{Atom, Pred, Var};
use crate::termination::DependencyGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinClass {
    /// `X is E`: evaluates the input, unifies the output.
    Eval,
    /// Arithmetic comparison of two evaluated inputs.
    Compare,
    /// Syntactic unification.
    Unify,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BuiltinSpec {
    pub name: &'static str,
    pub dirs: &'static [Dir],
    pub types: &'static [&'static str],
    pub class: BuiltinClass,
}

impl BuiltinSpec {
    pub fn pred(&self) -> Pred {
        Pred::new(self.name, self.dirs.len())
    }

    pub fn mode(&self) -> Mode {
        Mode(self.dirs.to_vec())
    }

    pub fn types(&self) -> Vec<String> {
        self.types.iter().map(|s| s.to_string()).collect()
    }

    /// Inputs raise an instantiation error when unbound and a type error when
    /// not numeric.
    pub fn is_arithmetic(&self) -> bool {
        self.class != BuiltinClass::Unify
    }
}

use Dir::{In, Out};

pub const TABLE: &[BuiltinSpec] = &[
    BuiltinSpec { name: "is", dirs: &[Out, In], types: &["num", "num"], class: BuiltinClass::Eval },
    BuiltinSpec { name: "<", dirs: &[In, In], types: &["num", "num"], class: BuiltinClass::Compare },
    BuiltinSpec { name: "=<", dirs: &[In, In], types: &["num", "num"], class: BuiltinClass::Compare },
    BuiltinSpec { name: ">", dirs: &[In, In], types: &["num", "num"], class: BuiltinClass::Compare },
    BuiltinSpec { name: "=\\=", dirs: &[In, In], types: &["num", "num"], class: BuiltinClass::Compare },
    BuiltinSpec { name: "=", dirs: &[In, In], types: &["any", "any"], class: BuiltinClass::Unify },
];

pub fn spec(p: &Pred) -> Option<&'static BuiltinSpec> {
    TABLE.iter().find(|s| *s.name == *p.name && s.dirs.len() == p.arity)
}

pub fn spec_by_name(name: &str, arity: usize) -> Option<&'static BuiltinSpec> {
    TABLE.iter().find(|s| s.name == name && s.dirs.len() == arity)
}

/// Per predicate, the argument positions (0-based) that are B-positions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BPositionTable {
    pub table: IndexMap<Pred, BTreeSet<usize>>,
}

impl BPositionTable {
    pub fn positions(&self, p: &Pred) -> impl Iterator<Item = usize> + '_ {
        self.table.get(p).into_iter().flatten().copied()
    }
}

/// The arithmetic built-ins a program uses, the natural choice of B.
pub fn default_bset(prog: &Program) -> Vec<Pred> {
    prog.builtins_used().into_iter().filter(|p| spec(p).is_some_and(|s| s.is_arithmetic())).collect()
}

fn check_bset(prog: &Program, mode: &str, bset: &[Pred]) -> Result<(), String> {
    for b in bset {
        let m = prog.mode_of(mode, b).map_err(|e| e.to_string())?;
        let tys = prog.type_of(b).map_err(|e| e.to_string())?;
        let bad = m.inputs().find(|&i| !prog.type_table.is_constant_type(&tys[i]));
        if let Some(i) = bad {
            return Err(format!("{b} has input position {} of non-constant type {}", i + 1, tys[i]));
        }
    }
    Ok(())
}

/// Head input positions sharing a variable with the input of a body atom
/// using a member of `bset`.
pub fn b_positions(prog: &Program, mode: &str, bset: &[Pred]) -> Result<BPositionTable, String> {
    check_bset(prog, mode, bset)?;
    let mut out = BPositionTable::default();
    for c in &prog.clauses {
        for a in c.body.iter().filter(|a| bset.contains(&a.pred())) {
            let m = prog.mode_of(mode, &a.pred()).map_err(|e| e.to_string())?;
            let vs: BTreeSet<Var> = m.inputs().flat_map(|i| a.args[i].vars()).collect();
            let hm = prog.mode_of(mode, &c.head.pred()).map_err(|e| e.to_string())?;
            for k in hm.inputs() {
                if vs.iter().any(|x| c.head.args[k].occurs(x)) {
                    out.table.entry(c.head.pred()).or_default().insert(k);
                }
            }
        }
    }
    Ok(out)
}

/// Would the declaration delay every atom that is variable at `k`? Free
/// outputs are taken as variables, everything else as non-variable.
fn forces_nonvar(prog: &Program, mode: &str, bf: &BoundFree, p: &Pred, k: usize) -> bool {
    let Ok(m) = prog.mode_of(mode, p) else { return false };
    let is_var: Vec<bool> = (0..p.arity).map(|i| i == k || (!m.is_input(i) && !bf.is_bound(p, i))).collect();
    prog.block(p).blocks_abstract(&is_var)
}

fn absorb(v: &mut ConditionVerdict, other: ConditionVerdict) {
    if !other.holds {
        other.violations.into_iter().for_each(|x| v.fail(x));
    }
}

/// Every B-position is a constant-type input and forced non-variable by the
/// block declaration, so B-atoms have ground input whenever they exist.
pub fn check_bground(prog: &Program, mode: &str, bset: &[Pred], waivers: &[(usize, Var)], query: Option<&[Atom]>) -> ConditionVerdict {
    let chk = Checker::new(prog, mode);
    let mut v = ConditionVerdict::new("B-ground", mode);
    absorb(&mut v, chk.check_program(Kind::Simply));
    absorb(&mut v, chk.input_linear(waivers));
    absorb(&mut v, chk.input_selectability(bset));
    let table = match b_positions(prog, mode, bset) {
        Ok(t) => t,
        Err(e) => {
            v.fail(Violation::new("B", e));
            return v;
        }
    };
    for (p, ks) in &table.table {
        let (Ok(_), Ok(tys)) = (prog.mode_of(mode, p), prog.type_of(p)) else { continue };
        for &k in ks {
            let mut bad = |reason: String| v.fail(Violation { at: p.to_string(), reason, positions: vec![k + 1] });
            if !prog.type_table.is_constant_type(&tys[k]) {
                bad(format!("B-position {} has non-constant type {}", k + 1, tys[k]));
            } else if !bset.contains(p) && !forces_nonvar(prog, mode, &chk.bf, p, k) {
                bad(format!("{} lets an atom through with B-position {} variable", prog.block(p).fmt_for(&p.name), k + 1));
            }
        }
    }
    // B-inputs must be fully determined by the head inputs
    for (idx, c) in prog.clauses.iter().enumerate() {
        let Ok(hm) = prog.mode_of(mode, &c.head.pred()) else { continue };
        let head_vars: BTreeSet<Var> = hm.inputs().flat_map(|i| c.head.args[i].vars()).collect();
        for a in c.body.iter().filter(|a| bset.contains(&a.pred())) {
            let Ok(m) = prog.mode_of(mode, &a.pred()) else { continue };
            let stray = m.inputs().flat_map(|i| a.args[i].vars()).find(|x| !head_vars.contains(x));
            if let Some(x) = stray {
                v.fail(Violation::new(prog.clause_label(idx), format!("input variable {x} of `{a}` does not occur in the head input")));
            }
        }
    }
    if let Some(q) = query {
        if let Err(e) = chk.check_query(Kind::Simply, q) {
            v.fail(Violation::new("query", format!("not permutation simply typed: {e}")));
        }
        for a in q.iter().filter(|a| bset.contains(&a.pred())) {
            if let Ok(m) = prog.mode_of(mode, &a.pred()) {
                if m.inputs().any(|i| !a.args[i].is_ground()) {
                    v.fail(Violation::new("query", format!("`{a}` has non-ground input")));
                }
            }
        }
    }
    v
}

/// Instantiation and type errors of arithmetic built-ins are unreachable:
/// their inputs are of constant type and ground whenever they are called.
pub fn builtin_safety(prog: &Program, mode: &str, waivers: &[(usize, Var)], query: Option<&[Atom]>) -> ConditionVerdict {
    let bset = default_bset(prog);
    let mut v = ConditionVerdict::new("built-in safety", mode);
    let mut protectable = Vec::new();
    for b in &bset {
        match check_bset(prog, mode, std::slice::from_ref(b)) {
            Ok(()) => protectable.push(b.clone()),
            Err(e) => v.fail(Violation::new(b.to_string(), format!("unprotected: {e}"))),
        }
    }
    let bg = check_bground(prog, mode, &protectable, waivers, query);
    absorb(&mut v, bg);
    v
}

/// Predicates whose every dependent is called only from safe positions,
/// together with the reason. Their block declarations do not change any
/// left-based derivation.
pub fn omit_blocks_by_safety(prog: &Program, mode: &str, queries: &[&[Atom]]) -> Result<Vec<(Pred, String)>, String> {
    let chk = Checker::new(prog, mode);
    let rt = chk.check_program(Kind::Robustly);
    if !rt.holds {
        return Err(format!("not permutation robustly typed: {}", rt.violations.first().map(|x| x.to_string()).unwrap_or_default()));
    }
    let sel = chk.input_selectability(&[]);
    if !sel.holds {
        return Err(format!("no input selectability: {}", sel.violations[0]));
    }
    let mut occurrences: Vec<(Pred, bool)> = Vec::new();
    for w in &rt.witnesses {
        let c = &prog.clauses[w.index.expect("program witnesses carry indices")];
        for (i, a) in c.body.iter().enumerate() {
            occurrences.push((a.pred(), w.permutation.is_safe_position(i + 1)));
        }
    }
    for q in queries {
        let pi = chk.check_query(Kind::Robustly, q).map_err(|e| format!("query not permutation robustly typed: {e}"))?;
        for (i, a) in q.iter().enumerate() {
            occurrences.push((a.pred(), pi.is_safe_position(i + 1)));
        }
    }
    let graph = DependencyGraph::new(prog);
    let mut out = Vec::new();
    for p in prog.preds.keys() {
        if prog.block(p).patterns.is_empty() {
            continue;
        }
        let deps = graph.dependents(p);
        if occurrences.iter().any(|(q, safe)| !safe && deps.contains(q)) {
            continue;
        }
        let names: Vec<String> = deps.iter().map(|q| q.to_string()).collect();
        out.push((p.clone(), format!("all atoms using {} are in safe positions", names.join(", "))));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Waiver {
    pub clause: usize,
    pub label: String,
    #[serde(serialize_with = "ser_display")]
    pub var: Var,
    /// 1: ground type and safe positions; 2: direct constant-type occurrences forced non-variable.
    pub case: u8,
    pub justification: String,
}

fn ser_display<S: serde::Serializer>(v: &Var, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Repeated head-input variables that still implement an equality check.
pub fn head_linearity_waivers(prog: &Program, mode: &str, queries: &[&[Atom]]) -> Vec<Waiver> {
    let chk = Checker::new(prog, mode);
    let graph = DependencyGraph::new(prog);
    let nm = chk.check_program(Kind::Nicely);
    let mut out = Vec::new();
    for (idx, c) in prog.clauses.iter().enumerate() {
        let p = c.head.pred();
        let (Ok(m), Ok(tys)) = (prog.mode_of(mode, &p), prog.type_of(&p)) else { continue };
        let mut count: BTreeMap<Var, usize> = BTreeMap::new();
        for i in m.inputs() {
            let mut vs = Vec::new();
            c.head.args[i].collect_vars(&mut vs);
            vs.into_iter().for_each(|x| *count.entry(x).or_default() += 1);
        }
        for (x, _) in count.into_iter().filter(|(_, n)| *n > 1) {
            let at: Vec<usize> = m.inputs().filter(|&i| c.head.args[i].occurs(&x)).collect();
            let direct = at.iter().all(|&i| c.head.args[i].as_var() == Some(&x));
            let constant = at.iter().all(|&i| prog.type_table.is_constant_type(&tys[i]));
            if direct && constant && at.iter().all(|&i| forces_nonvar(prog, mode, &chk.bf, &p, i)) {
                out.push(Waiver {
                    clause: idx,
                    label: prog.clause_label(idx),
                    var: x,
                    case: 2,
                    justification: "direct occurrences at constant-type inputs forced non-variable by the block declaration".into(),
                });
                continue;
            }
            if !nm.holds || !at.iter().all(|&i| prog.type_table.is_ground_type(&tys[i])) {
                continue;
            }
            let deps = graph.dependents(&p);
            let mut all_safe = true;
            for w in &nm.witnesses {
                let body = &prog.clauses[w.index.expect("program witnesses carry indices")].body;
                all_safe &= body.iter().enumerate().all(|(i, a)| !deps.contains(&a.pred()) || w.permutation.is_safe_position(i + 1));
            }
            for q in queries {
                match chk.check_query(Kind::Nicely, q) {
                    Ok(pi) => all_safe &= q.iter().enumerate().all(|(i, a)| !deps.contains(&a.pred()) || pi.is_safe_position(i + 1)),
                    Err(_) => all_safe = false,
                }
            }
            if all_safe {
                out.push(Waiver {
                    clause: idx,
                    label: prog.clause_label(idx),
                    var: x,
                    case: 1,
                    justification: "ground-type occurrences and every dependent atom in a safe position".into(),
                });
            }
        }
    }
    out
}

pub fn waiver_pairs(ws: &[Waiver]) -> Vec<(usize, Var)> {
    ws.iter().map(|w| (w.clause, w.var.clone())).collect()
}
