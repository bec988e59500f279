//! Permutation conditions on clauses and queries, bound/free positions,
//! input-linearity and input selectability.

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;

use crate::builtins;
use crate::program::{Mode, Program};
use crate::term::{repeated_var, Atom, Clause, Permutation, Pred, Term, Var};
use crate::types::Typed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Nicely,
    Well,
    Simply,
    Robustly,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::Nicely, Kind::Well, Kind::Simply, Kind::Robustly];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Nicely => "permutation nicely moded",
            Kind::Well => "permutation well typed",
            Kind::Simply => "permutation simply typed",
            Kind::Robustly => "permutation robustly typed",
        }
    }

    fn typed(self) -> bool {
        self != Kind::Nicely
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "nicely" | "nicely-moded" => Ok(Kind::Nicely),
            "well" | "well-typed" => Ok(Kind::Well),
            "simply" | "simply-typed" => Ok(Kind::Simply),
            "robustly" | "robustly-typed" => Ok(Kind::Robustly),
            _ => Err(format!("unknown condition `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub clause: String,
    #[serde(skip)]
    pub index: Option<usize>,
    pub permutation: Permutation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Clause label, predicate or `query`.
    pub at: String,
    pub reason: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub positions: Vec<usize>,
}

impl Violation {
    pub fn new(at: impl Into<String>, reason: impl Into<String>) -> Self {
        Violation { at: at.into(), reason: reason.into(), positions: Vec::new() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.at, self.reason)
    }
}

/// Outcome of checking one condition over a program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionVerdict {
    pub condition: String,
    pub mode: String,
    pub holds: bool,
    /// False when the condition's precondition fails; `holds` is then false too.
    pub applicable: bool,
    pub witnesses: Vec<Witness>,
    pub violations: Vec<Violation>,
}

impl ConditionVerdict {
    pub fn new(condition: impl Into<String>, mode: &str) -> Self {
        ConditionVerdict {
            condition: condition.into(),
            mode: mode.to_string(),
            holds: true,
            applicable: true,
            witnesses: Vec::new(),
            violations: Vec::new(),
        }
    }

    pub fn fail(&mut self, v: Violation) {
        self.holds = false;
        self.violations.push(v);
    }

    pub fn not_applicable(mut self, why: Violation) -> Self {
        self.applicable = false;
        self.holds = false;
        self.witnesses.clear();
        self.violations = vec![why];
        self
    }

    pub fn witness_for(&self, clause: usize) -> Option<&Permutation> {
        self.witnesses.iter().find(|w| w.index == Some(clause)).map(|w| &w.permutation)
    }

    pub fn status(&self) -> &'static str {
        match (self.applicable, self.holds) {
            (false, _) => "not applicable",
            (true, true) => "holds",
            (true, false) => "fails",
        }
    }
}

impl fmt::Display for ConditionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} [{}]: {}", self.condition, self.mode, self.status())?;
        for w in &self.witnesses {
            if !w.permutation.is_identity() {
                writeln!(f, "  {} {}", w.clause, w.permutation)?;
            }
        }
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Bound (true) or free (false) per argument position.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoundFree {
    pub table: IndexMap<Pred, Vec<bool>>,
}

impl BoundFree {
    pub fn is_bound(&self, p: &Pred, i: usize) -> bool {
        self.table.get(p).is_some_and(|v| v.get(i).copied().unwrap_or(false))
    }

    pub fn bound_outputs(&self, prog: &Program, mode: &str) -> Vec<(Pred, usize)> {
        let mut out = Vec::new();
        for (p, bs) in &self.table {
            let Ok(m) = prog.mode_of(mode, p) else { continue };
            for i in m.outputs() {
                if bs[i] {
                    out.push((p.clone(), i));
                }
            }
        }
        out
    }
}

impl Serialize for BoundFree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.table.len()))?;
        for (p, bs) in &self.table {
            let v: Vec<&str> = bs.iter().map(|b| if *b { "bound" } else { "free" }).collect();
            m.serialize_entry(&p.to_string(), &v)?;
        }
        m.end()
    }
}

/// Positions are bound when some head (inputs) or body atom (outputs) has a
/// non-variable there. Inputs of arithmetic built-ins are bound since their
/// conceptual fact heads are numbers.
pub fn bound_free(prog: &Program, mode: &str) -> BoundFree {
    let mut bf = BoundFree::default();
    for p in prog.all_preds() {
        let Ok(m) = prog.mode_of(mode, &p) else {
            bf.table.insert(p.clone(), vec![false; p.arity]);
            continue;
        };
        let mut bs = vec![false; p.arity];
        if prog.is_builtin(&p) {
            if builtins::spec(&p).is_some_and(|s| s.is_arithmetic()) {
                for i in m.inputs() {
                    bs[i] = true;
                }
            }
        } else {
            for (_, c) in prog.clauses_of(&p) {
                for i in m.inputs() {
                    bs[i] |= !c.head.args[i].is_var();
                }
            }
        }
        bf.table.insert(p, bs);
    }
    for c in &prog.clauses {
        for a in &c.body {
            let p = a.pred();
            let Ok(m) = prog.mode_of(mode, &p) else { continue };
            let bs = bf.table.get_mut(&p).expect("all predicates listed");
            for i in m.outputs() {
                bs[i] |= !a.args[i].is_var();
            }
        }
    }
    bf
}

/// Mode and type information for checking clauses and queries in one mode.
pub struct Checker<'p> {
    pub prog: &'p Program,
    pub mode: String,
    pub bf: BoundFree,
}

struct AtomInfo<'a> {
    atom: &'a Atom,
    mode: Mode,
    types: Option<Vec<String>>,
    arith: bool,
}

impl AtomInfo<'_> {
    fn inputs(&self) -> impl Iterator<Item = (usize, &Term)> + '_ {
        self.mode.inputs().map(|i| (i, &self.atom.args[i]))
    }

    fn outputs(&self) -> impl Iterator<Item = (usize, &Term)> + '_ {
        self.mode.outputs().map(|i| (i, &self.atom.args[i]))
    }

    fn input_vars(&self) -> BTreeSet<Var> {
        self.inputs().flat_map(|(_, t)| t.vars()).collect()
    }

    fn output_vars(&self) -> BTreeSet<Var> {
        self.outputs().flat_map(|(_, t)| t.vars()).collect()
    }

    fn typed_inputs(&self) -> Vec<Typed> {
        let tys = self.types.as_ref().expect("types resolved");
        self.inputs()
            .map(|(i, t)| Typed { term: t.clone(), ty: tys[i].clone(), evaluable: self.arith })
            .collect()
    }

    fn typed_outputs(&self) -> Vec<Typed> {
        let tys = self.types.as_ref().expect("types resolved");
        self.outputs().map(|(i, t)| Typed::new(t.clone(), &tys[i])).collect()
    }
}

fn var_list(vs: &BTreeSet<Var>) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

impl<'p> Checker<'p> {
    pub fn new(prog: &'p Program, mode: &str) -> Self {
        Checker { prog, mode: mode.to_string(), bf: bound_free(prog, mode) }
    }

    fn info<'a>(&self, a: &'a Atom, typed: bool) -> Result<AtomInfo<'a>, String> {
        let p = a.pred();
        let mode = self.prog.mode_of(&self.mode, &p).map_err(|e| e.to_string())?;
        let types = if typed { Some(self.prog.type_of(&p).map_err(|e| e.to_string())?) } else { None };
        let arith = self.prog.is_builtin(&p) && builtins::spec(&p).is_some_and(|s| s.is_arithmetic());
        Ok(AtomInfo { atom: a, mode, types, arith })
    }

    fn infos<'a>(&self, atoms: &'a [Atom], typed: bool) -> Result<Vec<AtomInfo<'a>>, String> {
        atoms.iter().map(|a| self.info(a, typed)).collect()
    }

    /// Conditions that do not depend on the order of the body.
    fn static_part(&self, kind: Kind, head: Option<&AtomInfo>, body: &[AtomInfo]) -> Result<(), String> {
        let outs: Vec<Term> = body.iter().flat_map(|b| b.outputs().map(|(_, t)| t.clone())).collect();
        if let Some(x) = repeated_var(&outs) {
            return Err(format!("output vector not linear: {x} twice"));
        }
        for (j, b) in body.iter().enumerate() {
            let shared: BTreeSet<Var> = b.input_vars().intersection(&b.output_vars()).cloned().collect();
            if !shared.is_empty() {
                return Err(format!("atom {} `{}` has {} in both input and output", j + 1, b.atom, var_list(&shared)));
            }
        }
        if let Some(h) = head {
            let body_out: BTreeSet<Var> = body.iter().flat_map(|b| b.output_vars()).collect();
            let clash: BTreeSet<Var> = h.input_vars().intersection(&body_out).cloned().collect();
            if !clash.is_empty() {
                return Err(format!("head input variable {} occurs in a body output", var_list(&clash)));
            }
        }
        if !kind.typed() {
            return Ok(());
        }
        let tt = &self.prog.type_table;
        if let Some(h) = head {
            let mut ante = h.typed_inputs();
            ante.iter_mut().for_each(|t| t.evaluable = false);
            ante.extend(body.iter().flat_map(|b| b.typed_outputs()));
            if !tt.implies_typing(&ante, &h.typed_outputs()) {
                return Err(format!("head output of `{}` not established as correctly typed", h.atom));
            }
        }
        match kind {
            Kind::Simply => {
                for (j, b) in body.iter().enumerate() {
                    for (i, t) in b.outputs() {
                        if !t.is_var() {
                            return Err(format!("non-variable term {t} in an output position ({} of atom {})", i + 1, j + 1));
                        }
                    }
                }
                if let Some(h) = head {
                    self.check_head_inputs(h, |_| true)?;
                }
            }
            Kind::Robustly => {
                let mut bound_terms: Vec<(Term, String)> = Vec::new();
                let mut fill: Vec<(Term, String)> = Vec::new();
                if let Some(h) = head {
                    let p = h.atom.pred();
                    let tys = h.types.as_ref().unwrap();
                    for (i, t) in h.inputs() {
                        if self.bf.is_bound(&p, i) {
                            bound_terms.push((t.clone(), tys[i].clone()));
                        } else if !t.is_var() {
                            return Err(format!("non-variable term {t} in free input position {} of the head", i + 1));
                        }
                    }
                }
                for (j, b) in body.iter().enumerate() {
                    let p = b.atom.pred();
                    let tys = b.types.as_ref().unwrap();
                    for (i, t) in b.outputs() {
                        if self.bf.is_bound(&p, i) {
                            bound_terms.push((t.clone(), tys[i].clone()));
                        } else if !t.is_var() {
                            return Err(format!("non-variable term {t} in free output position {} of atom {}", i + 1, j + 1));
                        }
                    }
                }
                for (t, _) in &bound_terms {
                    if !t.is_flat() {
                        return Err(format!("term {t} in a bound position is not flat"));
                    }
                }
                if !tt.vector_consistent(&bound_terms) {
                    return Err("terms in bound positions are not type-consistent".to_string());
                }
                fill.extend(bound_terms);
                if let Some(h) = head {
                    let p = h.atom.pred();
                    let tys = h.types.as_ref().unwrap();
                    for (i, t) in h.outputs() {
                        if !self.bf.is_bound(&p, i) {
                            continue;
                        }
                        if let Term::Var(x) = t {
                            let ok = fill.iter().any(|(u, uty)| u.as_var() == Some(x) && *uty == tys[i]);
                            if !ok {
                                return Err(format!(
                                    "variable {x} in bound head output position {} does not fill a bound position of type {}",
                                    i + 1,
                                    tys[i]
                                ));
                            }
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Head inputs flat, jointly type-consistent, with variables in
    /// variable-type positions; `only` selects which input positions count.
    fn check_head_inputs(&self, h: &AtomInfo, only: impl Fn(usize) -> bool) -> Result<(), String> {
        let tt = &self.prog.type_table;
        let tys = h.types.as_ref().unwrap();
        let mut items = Vec::new();
        for (i, t) in h.inputs().filter(|(i, _)| only(*i)) {
            if !t.is_flat() {
                return Err(format!("head input {t} is not flat"));
            }
            if tt.is_variable_type(&tys[i]) && !t.is_var() {
                return Err(format!("head input {t} sits in a position of variable type"));
            }
            items.push((t.clone(), tys[i].clone()));
        }
        if !tt.vector_consistent(&items) {
            return Err("head inputs are not type-consistent".to_string());
        }
        Ok(())
    }

    /// Whether atom `i` may come after exactly the atoms in `before`.
    fn placeable(&self, kind: Kind, head: Option<&AtomInfo>, body: &[AtomInfo], i: usize, before: &[usize]) -> Result<(), String> {
        let ins = body[i].input_vars();
        for (j, b) in body.iter().enumerate() {
            if j == i || before.contains(&j) {
                continue;
            }
            let shared: BTreeSet<Var> = ins.intersection(&b.output_vars()).cloned().collect();
            if !shared.is_empty() {
                return Err(format!("{} consumed by atom {} before atom {} produces it", var_list(&shared), i + 1, j + 1));
            }
        }
        if kind.typed() {
            let mut ante: Vec<Typed> = Vec::new();
            if let Some(h) = head {
                ante.extend(h.typed_inputs().into_iter().map(|mut t| {
                    t.evaluable = false;
                    t
                }));
            }
            for &j in before {
                ante.extend(body[j].typed_outputs());
            }
            if !self.prog.type_table.implies_typing(&ante, &body[i].typed_inputs()) {
                return Err(format!("input of atom {} `{}` not established as correctly typed", i + 1, body[i].atom));
            }
        }
        Ok(())
    }

    /// Direct check of the definition for a given permutation.
    pub fn check_with(&self, kind: Kind, head: Option<&Atom>, body: &[Atom], pi: &Permutation) -> Result<(), String> {
        if pi.len() != body.len() {
            return Err(format!("permutation {pi} does not fit a body of length {}", body.len()));
        }
        let h = head.map(|h| self.info(h, kind.typed())).transpose()?;
        let b = self.infos(body, kind.typed())?;
        self.static_part(kind, h.as_ref(), &b)?;
        for i in 0..body.len() {
            let before: Vec<usize> = (0..body.len()).filter(|&j| pi.at(j + 1) < pi.at(i + 1)).collect();
            self.placeable(kind, h.as_ref(), &b, i, &before)?;
        }
        Ok(())
    }

    /// Finds a witness, preferring textual order. Both ordering constraints
    /// only ever become easier as more atoms are placed before, so greedy
    /// placement finds a witness whenever one exists.
    pub fn find_permutation(&self, kind: Kind, head: Option<&Atom>, body: &[Atom]) -> Result<Permutation, String> {
        let h = head.map(|h| self.info(h, kind.typed())).transpose()?;
        let b = self.infos(body, kind.typed())?;
        self.static_part(kind, h.as_ref(), &b)?;
        let mut order: Vec<usize> = Vec::new();
        while order.len() < body.len() {
            let mut first_err = None;
            let next = (0..body.len()).filter(|i| !order.contains(i)).find(|&i| {
                match self.placeable(kind, h.as_ref(), &b, i, &order) {
                    Ok(()) => true,
                    Err(e) => {
                        first_err.get_or_insert(e);
                        false
                    }
                }
            });
            match next {
                Some(i) => order.push(i),
                None => return Err(first_err.unwrap_or_default()),
            }
        }
        let mut image = vec![0; body.len()];
        for (pos, &i) in order.iter().enumerate() {
            image[i] = pos + 1;
        }
        Ok(Permutation::new(image).expect("order is a bijection"))
    }

    pub fn check_clause(&self, kind: Kind, c: &Clause) -> Result<Permutation, String> {
        self.find_permutation(kind, Some(&c.head), &c.body)
    }

    pub fn check_query(&self, kind: Kind, q: &[Atom]) -> Result<Permutation, String> {
        self.find_permutation(kind, None, q)
    }

    /// Precondition for robust typing: well typed with non-variable types at
    /// all bound positions.
    pub fn robust_precondition(&self) -> Result<(), Violation> {
        let well = self.check_program(Kind::Well);
        if !well.holds {
            let first = well.violations.into_iter().next().map(|v| v.to_string()).unwrap_or_default();
            return Err(Violation::new("program", format!("not permutation well typed ({first})")));
        }
        for (p, bs) in &self.bf.table {
            let Ok(tys) = self.prog.type_of(p) else { continue };
            for (i, b) in bs.iter().enumerate() {
                if *b && self.prog.type_table.is_variable_type(&tys[i]) {
                    let mut v = Violation::new(p.to_string(), format!("bound position {} has variable type", i + 1));
                    v.positions = vec![i + 1];
                    return Err(v);
                }
            }
        }
        Ok(())
    }

    /// Checks every clause of the program.
    pub fn check_program(&self, kind: Kind) -> ConditionVerdict {
        let mut v = ConditionVerdict::new(kind.name(), &self.mode);
        if kind == Kind::Robustly {
            if let Err(why) = self.robust_precondition() {
                return v.not_applicable(why);
            }
        }
        for (idx, c) in self.prog.clauses.iter().enumerate() {
            let label = self.prog.clause_label(idx);
            match self.check_clause(kind, c) {
                Ok(pi) => v.witnesses.push(Witness { clause: label, index: Some(idx), permutation: pi }),
                Err(reason) => v.fail(Violation::new(label, reason)),
            }
        }
        if !v.holds {
            v.witnesses.clear();
        }
        v
    }

    /// Head inputs linear, except for waived variables; no `=` in mode (I,I).
    pub fn input_linear(&self, waivers: &[(usize, Var)]) -> ConditionVerdict {
        let mut v = ConditionVerdict::new("input-linear", &self.mode);
        for (idx, c) in self.prog.clauses.iter().enumerate() {
            let Ok(m) = self.prog.mode_of(&self.mode, &c.head.pred()) else {
                v.fail(Violation::new(self.prog.clause_label(idx), format!("no mode for {}", c.head.pred())));
                continue;
            };
            let mut seen = BTreeSet::new();
            let mut dup = BTreeSet::new();
            for i in m.inputs() {
                let mut vs = Vec::new();
                c.head.args[i].collect_vars(&mut vs);
                for x in vs {
                    if !seen.insert(x.clone()) {
                        dup.insert(x);
                    }
                }
            }
            for x in dup {
                if !waivers.iter().any(|(ci, w)| *ci == idx && *w == x) {
                    v.fail(Violation::new(self.prog.clause_label(idx), format!("head input variable {x} occurs more than once")));
                }
            }
            for a in &c.body {
                let p = a.pred();
                if self.prog.is_builtin(&p) && builtins::spec(&p).is_some_and(|s| s.class == builtins::BuiltinClass::Unify) {
                    if let Ok(m) = self.prog.mode_of(&self.mode, &p) {
                        if m.inputs().count() == 2 {
                            v.fail(Violation::new(self.prog.clause_label(idx), format!("`{a}` uses =(I,I)")));
                        }
                    }
                }
            }
        }
        v
    }

    /// Block declarations against bound/free positions, over atoms with
    /// variables in all free output positions. `exempt_max` skips the
    /// second condition for the given predicates.
    pub fn input_selectability(&self, exempt_max: &[Pred]) -> ConditionVerdict {
        let mut v = ConditionVerdict::new("input selectability", &self.mode);
        for p in self.prog.preds.keys() {
            let Ok(m) = self.prog.mode_of(&self.mode, p) else {
                v.fail(Violation::new(p.to_string(), "no mode declared"));
                continue;
            };
            let Ok(tys) = self.prog.type_of(p) else {
                v.fail(Violation::new(p.to_string(), "no type declared"));
                continue;
            };
            let decl = self.prog.block(p);
            let (c1, c2) = selectability_conditions(p, &m, &tys, &self.bf, &decl, &self.prog.type_table);
            if let Some(pat) = c1 {
                v.fail(Violation {
                    at: p.to_string(),
                    reason: format!("condition 1: {} is selectable although a bound input is variable", fmt_pattern(&p.name, &pat)),
                    positions: bound_var_positions(p, &m, &self.bf, &pat),
                });
            }
            if let Some(pat) = c2.filter(|_| !exempt_max.contains(p)) {
                v.fail(Violation::new(
                    p.to_string(),
                    format!("condition 2: {} is blocked although its non-variable-type inputs are bound", fmt_pattern(&p.name, &pat)),
                ));
            }
        }
        v
    }
}

fn bound_var_positions(p: &Pred, m: &Mode, bf: &BoundFree, pat: &[bool]) -> Vec<usize> {
    m.inputs().filter(|&i| bf.is_bound(p, i) && pat[i]).map(|i| i + 1).collect()
}

/// `p(V,N,...)` where V marks a variable and N a non-variable.
pub fn fmt_pattern(name: &str, is_var: &[bool]) -> String {
    let marks: Vec<&str> = is_var.iter().map(|b| if *b { "V" } else { "N" }).collect();
    format!("{name}({})", marks.join(","))
}

/// Enumerates var/non-var patterns with variables at free outputs and returns
/// a counterexample to each condition of input selectability.
pub fn selectability_conditions(
    p: &Pred,
    m: &Mode,
    tys: &[String],
    bf: &BoundFree,
    decl: &crate::term::BlockDecl,
    tt: &crate::types::TypeTable,
) -> (Option<Vec<bool>>, Option<Vec<bool>>) {
    let free_out: Vec<bool> = (0..p.arity).map(|i| !m.is_input(i) && !bf.is_bound(p, i)).collect();
    let varying: Vec<usize> = (0..p.arity).filter(|&i| !free_out[i]).collect();
    let (mut c1, mut c2) = (None, None);
    for bits in 0u32..(1 << varying.len()) {
        let mut is_var = free_out.clone();
        for (k, &i) in varying.iter().enumerate() {
            is_var[i] = bits & (1 << k) != 0;
        }
        let selectable = !decl.blocks_abstract(&is_var);
        let bound_in_var = m.inputs().any(|i| bf.is_bound(p, i) && is_var[i]);
        if c1.is_none() && selectable && bound_in_var {
            c1 = Some(is_var.clone());
        }
        let nonvar_typed_ok = m.inputs().all(|i| tt.is_variable_type(&tys[i]) || !is_var[i]);
        if c2.is_none() && !selectable && nonvar_typed_ok {
            c2 = Some(is_var);
        }
    }
    (c1, c2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::parser::parse_program;

    fn perm(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn permute_classification() {
        let p = parse_program(corpus::PERMUTE_LOOPS).unwrap();
        let m1 = Checker::new(&p, "M1");
        let v = m1.check_program(Kind::Nicely);
        assert!(v.holds);
        assert!(v.witnesses.iter().all(|w| w.permutation.is_identity()));
        assert!(m1.input_linear(&[]).holds);
        let m2 = Checker::new(&p, "M2");
        let v = m2.check_program(Kind::Nicely);
        assert!(v.holds);
        assert_eq!(v.witness_for(1), Some(&perm(&[2, 1])));
        assert!(m2.input_linear(&[]).holds);
        let t = Checker::new(&p, "test");
        assert!(t.check_program(Kind::Nicely).holds);
        let lin = t.input_linear(&[]);
        assert!(!lin.holds);
        assert_eq!(lin.violations[0].at, "delete/3#1");
        assert!(m1.check_program(Kind::Well).holds);
        assert_eq!(m2.check_program(Kind::Well).witness_for(1), Some(&perm(&[2, 1])));
    }

    #[test]
    fn qsort_simply_and_robustly() {
        let p = parse_program(corpus::QSORT).unwrap();
        let m1 = Checker::new(&p, "M1");
        let s = m1.check_program(Kind::Simply);
        assert!(s.holds, "{s}");
        assert_eq!(s.witness_for(1), Some(&perm(&[4, 1, 2, 3])));
        let m2 = Checker::new(&p, "M2");
        let s = m2.check_program(Kind::Simply);
        assert!(!s.holds);
        assert!(s.violations.iter().any(|v| v.reason.contains("[X|Bs2]")), "{s}");
        let r = m2.check_program(Kind::Robustly);
        assert!(r.holds, "{r}");
        assert_eq!(r.witness_for(1), Some(&perm(&[1, 4, 2, 3])));
        assert_eq!(m2.bf.bound_outputs(&p, "M2"), vec![(Pred::new("append", 3), 1)]);
    }

    #[test]
    fn tree_list_robust_both_modes() {
        let p = parse_program(corpus::TREE_LIST).unwrap();
        for m in ["M1", "M2"] {
            let c = Checker::new(&p, m);
            assert!(c.check_program(Kind::Robustly).holds, "{m}");
        }
        let m2 = Checker::new(&p, "M2");
        assert_eq!(m2.bf.bound_outputs(&p, "M2"), vec![(Pred::new("append", 3), 1)]);
        assert!(Checker::new(&p, "M1").bf.bound_outputs(&p, "M1").is_empty());
        assert_eq!(Checker::new(&p, "M1").check_program(Kind::Nicely).witness_for(1), Some(&perm(&[3, 1, 2])));
    }

    #[test]
    fn nqueens_first_clause() {
        let p = parse_program(corpus::NQUEENS).unwrap();
        let c = Checker::new(&p, "M1");
        let want = perm(&[1, 3, 2]);
        assert_eq!(c.check_clause(Kind::Nicely, &p.clauses[0]), Ok(want.clone()));
        assert_eq!(c.check_clause(Kind::Well, &p.clauses[0]), Ok(want.clone()));
        assert!(c.check_program(Kind::Simply).holds);
    }

    #[test]
    fn selectability() {
        let src = "%:- mode(A) append(o,o,i).\n%:- mode(B) append(i,i,o).\n%:- type append(list,list,list).\n\
                   %:- query(A) append(X,[1|Y],[1,2]).\n\
                   :- block append(-,?,-).\nappend([],Y,Y).\nappend([X|Xs],Ys,[X|Zs]) :- append(Xs,Ys,Zs).\n\
                   p(Z) :- append(X,[a|Y],Z).\n%:- mode(A) p(i).\n%:- mode(B) p(o).\n%:- type p(list).\n";
        let p = parse_program(src).unwrap();
        let a = Checker::new(&p, "A");
        assert!(a.bf.is_bound(&Pred::new("append", 3), 1));
        assert!(a.input_selectability(&[]).holds);
        let b = Checker::new(&p, "B");
        assert!(b.input_selectability(&[]).holds);
        let open = p.with_block(&Pred::new("append", 3), crate::term::BlockDecl::empty());
        let v = Checker::new(&open, "B").input_selectability(&[]);
        assert!(!v.holds);
        assert!(v.violations[0].reason.starts_with("condition 1"));
    }

    #[test]
    fn robust_not_applicable_with_variable_type_bound_position() {
        let src = "%:- mode q(i).\n%:- type q(any).\nq(f(X)).\n";
        let p = parse_program(src).unwrap();
        let v = Checker::new(&p, "default").check_program(Kind::Robustly);
        assert!(!v.applicable);
        assert_eq!(v.status(), "not applicable");
    }

    #[test]
    fn queries_use_empty_head_context() {
        let p = parse_program(corpus::PERMUTE).unwrap();
        let c = Checker::new(&p, "M2");
        let q = crate::parser::parse_query("permute(A,[1,2])").unwrap();
        assert!(c.check_query(Kind::Simply, &q).is_ok());
        let q = crate::parser::parse_query("permute(A,B), permute(B,A)").unwrap();
        assert!(c.check_query(Kind::Nicely, &q).is_err());
    }
}
