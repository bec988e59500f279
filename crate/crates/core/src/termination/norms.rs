//! Norms, level mappings, inferred size relations and the decrease check
//! shared by robustness and the residual LD obligation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use super::graph::DependencyGraph;
use crate::builtins::{self, BuiltinClass};
use crate::linear::{entails, LinExpr};
use crate::program::{Mode, Program};
use crate::term::{Atom, Clause, Pred, Term, Var, CONS, NIL};
use crate::types::{is_arith_op, ProdHead, TypeDef, TypeTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    ListLength,
    TermSize,
    IntValue,
}

impl Norm {
    pub fn name(self) -> &'static str {
        match self {
            Norm::ListLength => "listlen",
            Norm::TermSize => "termsize",
            Norm::IntValue => "intvalue",
        }
    }

    /// Norm values are never negative.
    fn natural(self) -> bool {
        self != Norm::IntValue
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Norm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "listlen" | "list-length" => Ok(Norm::ListLength),
            "termsize" | "term-size" => Ok(Norm::TermSize),
            "intvalue" | "integer-value" => Ok(Norm::IntValue),
            _ => Err(format!("unknown norm `{s}` (expected listlen, termsize or intvalue)")),
        }
    }
}

/// The norm of one variable, an unknown in the linear reasoning.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormVar {
    pub var: Var,
    pub norm: Norm,
}

impl fmt::Display for NormVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.norm, self.var)
    }
}

pub type Expr = LinExpr<NormVar>;

fn is_list_type(tt: &TypeTable, ty: &str) -> bool {
    match tt.get(ty) {
        Ok(TypeDef::Grammar(ps)) if ps.len() == 2 => {
            ps.iter().any(|p| p.head == ProdHead::Functor(NIL.into()) && p.args.is_empty())
                && ps.iter().any(|p| p.head == ProdHead::Functor(CONS.into()) && p.args.len() == 2 && p.args[1] == ty)
        }
        _ => false,
    }
}

/// Norms that make sense for a position of type `ty`, most natural first.
pub fn norms_for(tt: &TypeTable, ty: &str) -> Vec<Norm> {
    match tt.get(ty) {
        Ok(TypeDef::Int | TypeDef::Num) => vec![Norm::IntValue],
        Ok(TypeDef::Grammar(ps)) if ps.iter().any(|p| !p.args.is_empty()) => {
            if is_list_type(tt, ty) {
                vec![Norm::ListLength, Norm::TermSize]
            } else {
                vec![Norm::TermSize]
            }
        }
        _ => Vec::new(),
    }
}

/// Symbolic norm of `t` at type `ty`; `None` if the term has no norm there.
pub fn norm_of(tt: &TypeTable, t: &Term, ty: &str, norm: Norm) -> Option<Expr> {
    let var = |v: &Var| Expr::var(NormVar { var: v.clone(), norm });
    match norm {
        Norm::IntValue => match t {
            Term::Int(i) => Some(Expr::constant(*i)),
            Term::Var(v) => Some(var(v)),
            Term::App(f, a) if is_arith_op(f, a.len()) => {
                let x = norm_of(tt, &a[0], ty, norm)?;
                if a.len() == 1 {
                    return Some(x.scale(-1));
                }
                let y = norm_of(tt, &a[1], ty, norm)?;
                match &**f {
                    "+" => Some(x.add(&y)),
                    "-" => Some(x.sub(&y)),
                    _ if x.is_constant() => Some(y.scale(x.constant)),
                    _ if y.is_constant() => Some(x.scale(y.constant)),
                    _ => None,
                }
            }
            _ => None,
        },
        Norm::ListLength => match t {
            Term::Var(v) => Some(var(v)),
            Term::App(f, a) if &**f == NIL && a.is_empty() => Some(Expr::constant(0)),
            Term::App(f, a) if &**f == CONS && a.len() == 2 => Some(norm_of(tt, &a[1], ty, norm)?.add_const(1)),
            _ => None,
        },
        Norm::TermSize => match tt.get(ty).ok()? {
            TypeDef::Any | TypeDef::Int | TypeDef::Num => Some(Expr::constant(0)),
            TypeDef::Grammar(ps) => match t {
                Term::Var(_) if tt.is_constant_type(ty) => Some(Expr::constant(0)),
                Term::Var(v) => Some(var(v)),
                _ => {
                    let p = ps.iter().find(|p| p.matches(t))?;
                    let mut e = Expr::constant(if p.args.is_empty() { 0 } else { 1 });
                    if let Term::App(_, args) = t {
                        for (a, aty) in args.iter().zip(&p.args) {
                            e = e.add(&norm_of(tt, a, aty, norm)?);
                        }
                    }
                    Some(e)
                }
            },
        },
    }
}

/// Evaluates a norm on a concrete term.
pub fn norm_value(tt: &TypeTable, t: &Term, ty: &str, norm: Norm) -> Option<i64> {
    let e = norm_of(tt, t, ty, norm)?;
    e.is_constant().then_some(e.constant)
}

/// Per-predicate sum of norms over chosen input positions (0-based).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LevelMapping {
    pub entries: BTreeMap<Pred, Vec<(usize, Norm)>>,
}

impl LevelMapping {
    pub fn fmt_pred(&self, p: &Pred) -> String {
        match self.entries.get(p) {
            None => "0".into(),
            Some(es) if es.is_empty() => "0".into(),
            Some(es) => es.iter().map(|(i, n)| format!("{n}(arg {})", i + 1)).collect::<Vec<_>>().join(" + "),
        }
    }

    /// Parses `p/2=listlen:1+intvalue:2`, positions 1-based.
    pub fn parse_hint(s: &str) -> Result<(Pred, Vec<(usize, Norm)>), String> {
        let (p, rhs) = s.split_once('=').ok_or_else(|| format!("hint `{s}`: expected pred/arity=norm:pos"))?;
        let (name, arity) = p.rsplit_once('/').ok_or_else(|| format!("hint `{s}`: expected pred/arity"))?;
        let arity: usize = arity.parse().map_err(|_| format!("hint `{s}`: bad arity"))?;
        let mut out = Vec::new();
        for part in rhs.split('+') {
            let (n, pos) = part.split_once(':').ok_or_else(|| format!("hint `{s}`: expected norm:pos"))?;
            let pos: usize = pos.trim().parse().map_err(|_| format!("hint `{s}`: bad position"))?;
            if pos == 0 || pos > arity {
                return Err(format!("hint `{s}`: position {pos} out of range"));
            }
            out.push((pos - 1, n.trim().parse()?));
        }
        Ok((Pred::new(name.trim(), arity), out))
    }
}

impl fmt::Display for LevelMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.keys().map(|p| format!("|{p}| = {}", self.fmt_pred(p))).collect();
        f.write_str(&parts.join("; "))
    }
}

/// `Σ lhs ≤ Σ rhs + constant` (or `≥` when `upper` is false) between norms
/// of output positions (lhs) and input positions (rhs) of every answer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Relation {
    pub pred: Pred,
    pub lhs: Vec<(usize, Norm)>,
    pub rhs: Vec<(usize, Norm)>,
    pub constant: i64,
    pub upper: bool,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &[(usize, Norm)]| s.iter().map(|(i, n)| format!("{n}(arg {})", i + 1)).collect::<Vec<_>>();
        let l = side(&self.lhs).join(" + ");
        let mut r = side(&self.rhs).join(" + ");
        if r.is_empty() {
            r = self.constant.to_string();
        } else if self.constant != 0 {
            r = format!("{r} {} {}", if self.constant < 0 { "-" } else { "+" }, self.constant.abs());
        }
        write!(f, "{}: {l} {} {r}", self.pred, if self.upper { "<=" } else { ">=" })
    }
}

/// Mode and type lookups for one mode of a program.
pub struct NormCtx<'p> {
    pub prog: &'p Program,
    pub mode: String,
    pub relations: HashMap<Pred, Vec<Relation>>,
}

impl<'p> NormCtx<'p> {
    pub fn new(prog: &'p Program, mode: &str) -> Self {
        NormCtx { prog, mode: mode.to_string(), relations: HashMap::new() }
    }

    fn tt(&self) -> &TypeTable {
        &self.prog.type_table
    }

    fn signature(&self, p: &Pred) -> Option<(Mode, Vec<String>)> {
        Some((self.prog.mode_of(&self.mode, p).ok()?, self.prog.type_of(p).ok()?))
    }

    /// Sum of norms at the given positions of `a`.
    fn positions_norm(&self, a: &Atom, tys: &[String], ps: &[(usize, Norm)]) -> Option<Expr> {
        let mut e = Expr::constant(0);
        for &(i, n) in ps {
            e = e.add(&norm_of(self.tt(), &a.args[i], &tys[i], n)?);
        }
        Some(e)
    }

    /// `|a|` under the mapping; predicates without an entry have level 0.
    pub fn level(&self, lm: &LevelMapping, a: &Atom) -> Option<Expr> {
        match lm.entries.get(&a.pred()) {
            None => Some(Expr::constant(0)),
            Some(es) => {
                let (_, tys) = self.signature(&a.pred())?;
                self.positions_norm(a, &tys, es)
            }
        }
    }

    /// Linear facts (each `≥ 0`) about the norms of an answer to `a`.
    pub fn facts(&self, a: &Atom) -> Vec<Expr> {
        let p = a.pred();
        if self.prog.is_builtin(&p) {
            return self.builtin_facts(a);
        }
        let Some((_, tys)) = self.signature(&p) else { return Vec::new() };
        self.relations.get(&p).into_iter().flatten().filter_map(|r| self.instantiate(r, a, &tys)).collect()
    }

    fn instantiate(&self, r: &Relation, a: &Atom, tys: &[String]) -> Option<Expr> {
        let l = self.positions_norm(a, tys, &r.lhs)?;
        let rhs = self.positions_norm(a, tys, &r.rhs)?.add_const(r.constant);
        Some(if r.upper { rhs.sub(&l) } else { l.sub(&rhs) })
    }

    fn builtin_facts(&self, a: &Atom) -> Vec<Expr> {
        let Some(spec) = builtins::spec(&a.pred()) else { return Vec::new() };
        let int = |t: &Term| norm_of(self.tt(), t, "int", Norm::IntValue);
        let (Some(x), Some(y)) = (int(&a.args[0]), int(&a.args[1])) else { return Vec::new() };
        match (spec.class, spec.name) {
            (BuiltinClass::Eval, _) => vec![x.sub(&y), y.sub(&x)],
            (BuiltinClass::Compare, "<") => vec![y.sub(&x).add_const(-1)],
            (BuiltinClass::Compare, "=<") => vec![y.sub(&x)],
            (BuiltinClass::Compare, ">") => vec![x.sub(&y).add_const(-1)],
            _ => Vec::new(),
        }
    }

    /// `|h| > |b|` and `|h| ≥ 1`, so that the decrease also holds for the
    /// level `max(0, ·)` when integer values are involved.
    fn decreases(&self, mut hyps: Vec<Expr>, h: &Expr, b: &Expr) -> bool {
        let mut nat: BTreeSet<NormVar> = BTreeSet::new();
        for e in hyps.iter().chain([h, b]) {
            nat.extend(e.keys().filter(|k| k.norm.natural()).cloned());
        }
        hyps.extend(nat.into_iter().map(Expr::var));
        entails(&hyps, &h.sub(b).add_const(-1)) && entails(&hyps, &h.add_const(-1))
    }

    /// Every call from a clause of the component back into it decreases.
    /// With `with_facts`, answers of atoms textually before the call may be
    /// used, which is sound for left-to-right execution only.
    pub fn check_decrease(&self, clauses: &[&Clause], scc: &[Pred], lm: &LevelMapping, with_facts: bool) -> Result<(), String> {
        for c in clauses {
            let h = self.level(lm, &c.head).ok_or_else(|| format!("no level for head `{}`", c.head))?;
            for (i, a) in c.body.iter().enumerate() {
                if !scc.contains(&a.pred()) {
                    continue;
                }
                let b = self.level(lm, a).ok_or_else(|| format!("no level for `{a}`"))?;
                let hyps: Vec<Expr> = if with_facts { c.body[..i].iter().flat_map(|x| self.facts(x)).collect() } else { Vec::new() };
                if !self.decreases(hyps, &h, &b) {
                    return Err(format!("`{}` does not decrease to `{a}` ({h} vs {b})", c.head));
                }
            }
        }
        Ok(())
    }

    /// Candidate level mappings for one predicate: single input positions,
    /// then pairs.
    fn candidates(&self, p: &Pred) -> Vec<Vec<(usize, Norm)>> {
        let Some((m, tys)) = self.signature(p) else { return vec![Vec::new()] };
        let singles: Vec<(usize, Norm)> = m.inputs().flat_map(|i| norms_for(self.tt(), &tys[i]).into_iter().map(move |n| (i, n))).collect();
        let mut out: Vec<Vec<(usize, Norm)>> = singles.iter().map(|s| vec![*s]).collect();
        for (a, x) in singles.iter().enumerate() {
            for y in &singles[a + 1..] {
                if x.0 != y.0 {
                    out.push(vec![*x, *y]);
                }
            }
        }
        if out.is_empty() {
            out.push(Vec::new());
        }
        out
    }

    /// Searches a level mapping under which the component decreases.
    pub fn find_level_mapping(
        &self,
        clauses: &[&Clause],
        scc: &[Pred],
        hints: &LevelMapping,
        with_facts: bool,
    ) -> Result<LevelMapping, String> {
        const MAX_COMBOS: usize = 20_000;
        let per_pred: Vec<Vec<Vec<(usize, Norm)>>> = scc
            .iter()
            .map(|p| match hints.entries.get(p) {
                Some(h) => vec![h.clone()],
                None => self.candidates(p),
            })
            .collect();
        let total = per_pred.iter().map(|c| c.len()).try_fold(1usize, |acc, n| acc.checked_mul(n)).unwrap_or(usize::MAX);
        let mut last_err = String::from("no candidate level mapping");
        let mut choice = vec![0usize; scc.len()];
        for _ in 0..total.min(MAX_COMBOS) {
            let lm = LevelMapping {
                entries: scc.iter().zip(&choice).zip(&per_pred).map(|((p, &k), cs)| (p.clone(), cs[k].clone())).collect(),
            };
            match self.check_decrease(clauses, scc, &lm, with_facts) {
                Ok(()) => return Ok(lm),
                Err(e) => last_err = e,
            }
            for (k, cs) in choice.iter_mut().zip(&per_pred) {
                *k += 1;
                if *k < cs.len() {
                    break;
                }
                *k = 0;
            }
        }
        Err(format!("no decreasing level mapping found (last attempt: {last_err})"))
    }

    /// Infers size relations for all defined predicates, bottom-up over the
    /// components. Candidates are kept while they survive induction over the
    /// clauses of their component.
    pub fn infer_relations(&mut self, graph: &DependencyGraph) {
        for scc in graph.sccs() {
            let defined: Vec<&Pred> = scc.iter().filter(|p| self.prog.is_defined(p)).collect();
            if defined.is_empty() {
                continue;
            }
            for p in &defined {
                let cands = self.relation_candidates(p);
                self.relations.insert((*p).clone(), cands);
            }
            loop {
                let mut changed = false;
                for p in &defined {
                    // without a mode and type there are no candidates to prune
                    let Some((_, tys)) = self.signature(p) else { continue };
                    let rels = self.relations[*p].clone();
                    let kept: Vec<Relation> = rels.into_iter().filter(|r| self.relation_holds(p, r, &tys)).collect();
                    if kept.len() != self.relations[*p].len() {
                        changed = true;
                        self.relations.insert((*p).clone(), kept);
                    }
                }
                if !changed {
                    break;
                }
            }
            for p in &defined {
                let rels = std::mem::take(self.relations.get_mut(*p).expect("inserted above"));
                self.relations.insert((*p).clone(), tightest(rels));
            }
        }
    }

    fn relation_holds(&self, p: &Pred, r: &Relation, tys: &[String]) -> bool {
        self.prog.clauses_of(p).all(|(_, c)| {
            let Some(goal) = self.instantiate(r, &c.head, tys) else { return false };
            let hyps: Vec<Expr> = c.body.iter().flat_map(|a| self.facts(a)).collect();
            let mut all = hyps.clone();
            let mut nat = BTreeSet::new();
            for e in hyps.iter().chain([&goal]) {
                nat.extend(e.keys().filter(|k| k.norm.natural()).cloned());
            }
            all.extend(nat.into_iter().map(Expr::var));
            entails(&all, &goal)
        })
    }

    fn relation_candidates(&self, p: &Pred) -> Vec<Relation> {
        let Some((m, tys)) = self.signature(p) else { return Vec::new() };
        let primary = |i: usize| norms_for(self.tt(), &tys[i]).first().map(|n| (i, *n));
        let outs: Vec<(usize, Norm)> = m.outputs().filter_map(primary).collect();
        let ins: Vec<(usize, Norm)> = m.inputs().filter_map(primary).collect();
        let subsets = |xs: &[(usize, Norm)], min: usize| {
            let mut s: Vec<Vec<(usize, Norm)>> = Vec::new();
            if min == 0 {
                s.push(Vec::new());
            }
            for (a, x) in xs.iter().enumerate() {
                s.push(vec![*x]);
                for y in &xs[a + 1..] {
                    s.push(vec![*x, *y]);
                }
            }
            s
        };
        let mut out = Vec::new();
        for lhs in subsets(&outs, 1) {
            for rhs in subsets(&ins, 0) {
                for constant in -2..=2 {
                    for upper in [true, false] {
                        out.push(Relation { pred: p.clone(), lhs: lhs.clone(), rhs: rhs.clone(), constant, upper });
                    }
                }
            }
        }
        out
    }
}

/// Keeps the strongest constant per shape.
fn tightest(rels: Vec<Relation>) -> Vec<Relation> {
    let mut best: BTreeMap<_, Relation> = BTreeMap::new();
    for r in rels {
        let key = (r.lhs.clone(), r.rhs.clone(), r.upper);
        match best.get(&key) {
            Some(b) if (r.upper && b.constant <= r.constant) || (!r.upper && b.constant >= r.constant) => {}
            _ => {
                best.insert(key, r);
            }
        }
    }
    best.into_values().collect()
}
