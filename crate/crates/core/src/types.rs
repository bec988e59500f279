//! Regular types given by term grammars, closed under instantiation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::Serialize;

use crate::term::{Term, Var};

pub const ANY: &str = "any";
pub const INT: &str = "int";
pub const NUM: &str = "num";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProdHead {
    Functor(Arc<str>),
    Int(i64),
}

/// One alternative of a grammar: a functor with a type per argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub head: ProdHead,
    pub args: Vec<String>,
}

impl Production {
    pub fn new(functor: &str, args: &[&str]) -> Self {
        Production { head: ProdHead::Functor(Arc::from(functor)), args: args.iter().map(|s| s.to_string()).collect() }
    }

    pub fn matches(&self, t: &Term) -> bool {
        match (&self.head, t) {
            (ProdHead::Int(i), Term::Int(j)) => i == j && self.args.is_empty(),
            (ProdHead::Functor(f), Term::App(g, args)) => f == g && args.len() == self.args.len(),
            _ => false,
        }
    }

    pub fn to_term(&self) -> Term {
        match &self.head {
            ProdHead::Int(i) => Term::Int(*i),
            ProdHead::Functor(f) => Term::app(f, self.args.iter().map(|a| Term::constant(a)).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeDef {
    /// The variable type.
    Any,
    Int,
    /// Numbers; contains `int`.
    Num,
    Grammar(Vec<Production>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unknown type `{0}`")]
    Unknown(String),
    #[error("type `{0}` is primitive and cannot be redefined")]
    Primitive(String),
    #[error("type `{0}` is empty")]
    Empty(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub variable: bool,
    pub ground: bool,
    pub constant: bool,
}

/// Type names mapped to definitions. Starts with the prelude types.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeTable {
    defs: IndexMap<String, TypeDef>,
}

impl Default for TypeTable {
    fn default() -> Self {
        Self::prelude()
    }
}

/// A term together with the type it should have. `evaluable` marks
/// arithmetic input positions of built-ins, where expressions over numbers
/// stand for their value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Typed {
    pub term: Term,
    pub ty: String,
    pub evaluable: bool,
}

impl Typed {
    pub fn new(term: Term, ty: &str) -> Self {
        Typed { term, ty: ty.to_string(), evaluable: false }
    }
}

pub fn is_arith_op(name: &str, arity: usize) -> bool {
    matches!((name, arity), ("+", 2) | ("-", 2) | ("*", 2) | ("-", 1))
}

impl TypeTable {
    pub fn prelude() -> Self {
        let mut defs = IndexMap::new();
        defs.insert(ANY.to_string(), TypeDef::Any);
        defs.insert(INT.to_string(), TypeDef::Int);
        defs.insert(NUM.to_string(), TypeDef::Num);
        defs.insert("list".into(), TypeDef::Grammar(vec![Production::new("[]", &[]), Production::new(".", &[ANY, "list"])]));
        defs.insert("intlist".into(), TypeDef::Grammar(vec![Production::new("[]", &[]), Production::new(".", &[INT, "intlist"])]));
        defs.insert("numlist".into(), TypeDef::Grammar(vec![Production::new("[]", &[]), Production::new(".", &[NUM, "numlist"])]));
        TypeTable { defs }
    }

    pub fn is_prelude(name: &str) -> bool {
        matches!(name, ANY | INT | NUM | "list" | "intlist" | "numlist")
    }

    /// Adds or replaces a grammar type.
    pub fn define(&mut self, name: &str, prods: Vec<Production>) -> Result<(), TypeError> {
        if matches!(name, ANY | INT | NUM) {
            return Err(TypeError::Primitive(name.to_string()));
        }
        self.defs.insert(name.to_string(), TypeDef::Grammar(prods));
        Ok(())
    }

    /// Checks that every referenced name resolves and every type is inhabited.
    pub fn validate(&self) -> Result<(), TypeError> {
        for def in self.defs.values() {
            if let TypeDef::Grammar(ps) = def {
                for p in ps {
                    for a in &p.args {
                        self.get(a)?;
                    }
                }
            }
        }
        for name in self.defs.keys() {
            let set: BTreeSet<String> = [name.clone()].into_iter().collect();
            if !self.inhabited(&set, &mut Vec::new()) {
                return Err(TypeError::Empty(name.clone()));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&TypeDef, TypeError> {
        self.defs.get(name).ok_or_else(|| TypeError::Unknown(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.defs.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.defs.keys()
    }

    pub fn user_grammars(&self) -> impl Iterator<Item = (&String, &Vec<Production>)> {
        self.defs.iter().filter_map(|(n, d)| match d {
            TypeDef::Grammar(ps) if !Self::is_prelude(n) => Some((n, ps)),
            _ => None,
        })
    }

    pub fn productions(&self, name: &str) -> &[Production] {
        match self.defs.get(name) {
            Some(TypeDef::Grammar(ps)) => ps,
            _ => &[],
        }
    }

    /// `t : T` for a concrete term; a variable belongs only to `any`.
    pub fn member(&self, t: &Term, ty: &str) -> Result<bool, TypeError> {
        Ok(match self.get(ty)? {
            TypeDef::Any => true,
            TypeDef::Int | TypeDef::Num => matches!(t, Term::Int(_)),
            TypeDef::Grammar(ps) => {
                let mut ok = false;
                for p in ps.iter().filter(|p| p.matches(t)) {
                    let args: &[Term] = match t {
                        Term::App(_, a) => a,
                        _ => &[],
                    };
                    let mut all = true;
                    for (a, aty) in args.iter().zip(&p.args) {
                        if !self.member(a, aty)? {
                            all = false;
                            break;
                        }
                    }
                    if all {
                        ok = true;
                        break;
                    }
                }
                ok
            }
        })
    }

    /// Value of a ground arithmetic expression, if it is one.
    pub fn eval(t: &Term) -> Option<i64> {
        match t {
            Term::Int(i) => Some(*i),
            Term::App(f, a) if is_arith_op(f, a.len()) => {
                let x = Self::eval(&a[0])?;
                if a.len() == 1 {
                    return x.checked_neg();
                }
                let y = Self::eval(&a[1])?;
                match &**f {
                    "+" => x.checked_add(y),
                    "-" => x.checked_sub(y),
                    _ => x.checked_mul(y),
                }
            }
            _ => None,
        }
    }

    /// Membership where arithmetic expressions count as their value.
    pub fn member_eval(&self, t: &Term, ty: &str) -> Result<bool, TypeError> {
        match self.get(ty)? {
            TypeDef::Int | TypeDef::Num => Ok(Self::eval(t).is_some()),
            _ => self.member(t, ty),
        }
    }

    /// Some instance of `t` lies in `T`. Shared variables must be
    /// instantiable consistently with every type they are demanded at.
    pub fn type_consistent(&self, t: &Term, ty: &str) -> Result<bool, TypeError> {
        self.get(ty)?;
        let mut env: BTreeMap<Var, BTreeSet<String>> = BTreeMap::new();
        Ok(self.tc(&[(t.clone(), ty.to_string())], &mut env))
    }

    /// Joint type consistency of a vector of typed terms.
    pub fn vector_consistent(&self, items: &[(Term, String)]) -> bool {
        let mut env = BTreeMap::new();
        self.tc(items, &mut env)
    }

    fn tc(&self, work: &[(Term, String)], env: &mut BTreeMap<Var, BTreeSet<String>>) -> bool {
        let Some(((t, ty), rest)) = work.split_first() else {
            return env.values().all(|s| self.inhabited(s, &mut Vec::new()));
        };
        match (t, self.get(ty)) {
            (_, Err(_)) => false,
            (_, Ok(TypeDef::Any)) => self.tc(rest, env),
            (Term::Var(v), _) => {
                let mut env2 = env.clone();
                env2.entry(v.clone()).or_default().insert(ty.clone());
                if self.tc(rest, &mut env2) {
                    *env = env2;
                    true
                } else {
                    false
                }
            }
            (Term::Int(_), Ok(TypeDef::Int | TypeDef::Num)) => self.tc(rest, env),
            (_, Ok(TypeDef::Int | TypeDef::Num)) => false,
            (_, Ok(TypeDef::Grammar(ps))) => {
                for p in ps.iter().filter(|p| p.matches(t)) {
                    let mut next: Vec<(Term, String)> = match t {
                        Term::App(_, args) => args.iter().cloned().zip(p.args.iter().cloned()).collect(),
                        _ => Vec::new(),
                    };
                    next.extend_from_slice(rest);
                    let mut env2 = env.clone();
                    if self.tc(&next, &mut env2) {
                        *env = env2;
                        return true;
                    }
                }
                false
            }
        }
    }

    /// Whether the intersection of the given types contains a term.
    fn inhabited(&self, set: &BTreeSet<String>, stack: &mut Vec<BTreeSet<String>>) -> bool {
        let mut set: BTreeSet<String> = set.iter().filter(|t| self.get(t) != Ok(&TypeDef::Any)).cloned().collect();
        if set.contains(INT) && set.contains(NUM) {
            set.remove(NUM);
        }
        if set.is_empty() {
            return true;
        }
        if stack.contains(&set) {
            return false;
        }
        let grammars: Vec<&Vec<Production>> = set
            .iter()
            .filter_map(|t| match self.get(t) {
                Ok(TypeDef::Grammar(ps)) => Some(ps),
                _ => None,
            })
            .collect();
        let numeric = set.iter().any(|t| matches!(self.get(t), Ok(TypeDef::Int | TypeDef::Num)));
        if grammars.is_empty() {
            return true;
        }
        stack.push(set.clone());
        let result = grammars[0].iter().any(|p| {
            if numeric && !matches!(p.head, ProdHead::Int(_)) {
                return false;
            }
            // every other grammar must offer the same head; try each combination
            let mut choices: Vec<Vec<&Production>> = Vec::new();
            for g in &grammars[1..] {
                let c: Vec<&Production> = g.iter().filter(|q| q.head == p.head && q.args.len() == p.args.len()).collect();
                if c.is_empty() {
                    return false;
                }
                choices.push(c);
            }
            let mut idx = vec![0usize; choices.len()];
            loop {
                let ok = (0..p.args.len()).all(|i| {
                    let mut s: BTreeSet<String> = [p.args[i].clone()].into_iter().collect();
                    for (c, &j) in choices.iter().zip(&idx) {
                        s.insert(c[j].args[i].clone());
                    }
                    self.inhabited(&s, stack)
                });
                if ok {
                    return true;
                }
                let mut k = 0;
                loop {
                    if k == idx.len() {
                        return false;
                    }
                    idx[k] += 1;
                    if idx[k] < choices[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
        });
        stack.pop();
        result
    }

    /// Every member of `sub` is a member of `sup`.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        self.subtype(sub, sup, &mut Vec::new())
    }

    fn subtype(&self, sub: &str, sup: &str, assumed: &mut Vec<(String, String)>) -> bool {
        if sub == sup {
            return true;
        }
        let (Ok(a), Ok(b)) = (self.get(sub), self.get(sup)) else {
            return false;
        };
        match (a, b) {
            (_, TypeDef::Any) => true,
            (TypeDef::Any, _) => false,
            (TypeDef::Int, TypeDef::Int | TypeDef::Num) | (TypeDef::Num, TypeDef::Num) => true,
            (TypeDef::Int | TypeDef::Num, TypeDef::Grammar(_)) => false,
            (TypeDef::Grammar(ps), TypeDef::Int | TypeDef::Num) => ps.iter().all(|p| matches!(p.head, ProdHead::Int(_))),
            (TypeDef::Num, TypeDef::Int) => false,
            (TypeDef::Grammar(ps), TypeDef::Grammar(qs)) => {
                let key = (sub.to_string(), sup.to_string());
                if assumed.contains(&key) {
                    return true;
                }
                assumed.push(key);
                let ok = ps.iter().all(|p| {
                    qs.iter().any(|q| {
                        q.head == p.head
                            && q.args.len() == p.args.len()
                            && p.args.iter().zip(&q.args).all(|(x, y)| self.subtype(x, y, assumed))
                    })
                });
                assumed.pop();
                ok
            }
        }
    }

    fn reachable(&self, name: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![name.to_string()];
        while let Some(t) = stack.pop() {
            if !seen.insert(t.clone()) {
                continue;
            }
            for p in self.productions(&t) {
                stack.extend(p.args.iter().cloned());
            }
        }
        seen
    }

    pub fn classify(&self, ty: &str) -> Result<Classification, TypeError> {
        Ok(match self.get(ty)? {
            TypeDef::Any => Classification { variable: true, ground: false, constant: false },
            TypeDef::Int | TypeDef::Num => Classification { variable: false, ground: true, constant: true },
            TypeDef::Grammar(ps) => {
                let ground = self.reachable(ty).iter().all(|t| !matches!(self.get(t), Ok(TypeDef::Any)));
                let constant = ground && ps.iter().all(|p| p.args.is_empty());
                Classification { variable: false, ground, constant }
            }
        })
    }

    pub fn is_variable_type(&self, ty: &str) -> bool {
        matches!(self.get(ty), Ok(TypeDef::Any))
    }

    pub fn is_constant_type(&self, ty: &str) -> bool {
        self.classify(ty).map(|c| c.constant).unwrap_or(false)
    }

    pub fn is_ground_type(&self, ty: &str) -> bool {
        self.classify(ty).map(|c| c.ground).unwrap_or(false)
    }

    pub fn is_numeric(&self, ty: &str) -> bool {
        matches!(self.get(ty), Ok(TypeDef::Int | TypeDef::Num))
    }

    /// Conservative check of `⊨ ∧ antecedent ⇒ ∧ consequent`. Returns false when
    /// the implication could not be established.
    pub fn implies_typing(&self, antecedent: &[Typed], consequent: &[Typed]) -> bool {
        let mut env = Env::default();
        for a in antecedent {
            if !self.decompose(&a.term, &a.ty, &mut env) {
                return true;
            }
        }
        if env.demands.values().any(|s| !self.inhabited(s, &mut Vec::new())) {
            return true;
        }
        consequent.iter().all(|c| self.entails(&c.term, &c.ty, c.evaluable, &env))
    }

    /// Variable demands derived from the antecedent pairs; `None` if unsatisfiable.
    pub fn environment(&self, antecedent: &[Typed]) -> Option<Env> {
        let mut env = Env::default();
        for a in antecedent {
            if !self.decompose(&a.term, &a.ty, &mut env) {
                return None;
            }
        }
        Some(env)
    }

    /// Returns false if `t : T` cannot hold for any instance.
    fn decompose(&self, t: &Term, ty: &str, env: &mut Env) -> bool {
        match (t, self.get(ty)) {
            (_, Err(_)) | (_, Ok(TypeDef::Any)) => true,
            (Term::Var(v), _) => {
                env.demands.entry(v.clone()).or_default().insert(ty.to_string());
                true
            }
            (Term::Int(_), Ok(TypeDef::Int | TypeDef::Num)) => true,
            (_, Ok(TypeDef::Int | TypeDef::Num)) => false,
            (_, Ok(TypeDef::Grammar(ps))) => {
                let matching: Vec<&Production> = ps.iter().filter(|p| p.matches(t)).collect();
                match matching.as_slice() {
                    [] => false,
                    [p] => match t {
                        Term::App(_, args) => args.iter().zip(&p.args).all(|(a, aty)| self.decompose(a, aty, env)),
                        _ => true,
                    },
                    // ambiguous grammar: no information, still satisfiable
                    _ => true,
                }
            }
        }
    }

    /// `t : S` follows from the environment.
    pub fn entails(&self, t: &Term, ty: &str, evaluable: bool, env: &Env) -> bool {
        match (t, self.get(ty)) {
            (_, Err(_)) => false,
            (_, Ok(TypeDef::Any)) => true,
            (Term::Var(v), _) => env.demands.get(v).is_some_and(|ds| ds.iter().any(|d| self.is_subtype(d, ty))),
            (Term::Int(_), Ok(TypeDef::Int | TypeDef::Num)) => true,
            (Term::App(f, args), Ok(TypeDef::Int | TypeDef::Num)) => {
                evaluable && is_arith_op(f, args.len()) && args.iter().all(|a| self.entails(a, ty, true, env))
            }
            (_, Ok(TypeDef::Grammar(ps))) => ps.iter().filter(|p| p.matches(t)).any(|p| match t {
                Term::App(_, args) => args.iter().zip(&p.args).all(|(a, aty)| self.entails(a, aty, false, env)),
                _ => true,
            }),
        }
    }

    /// Size of a correctly typed term, counting one per constructor and
    /// ignoring subterms at variable-type positions.
    pub fn typed_size(&self, t: &Term, ty: &str) -> Option<u64> {
        match (t, self.get(ty).ok()?) {
            (_, TypeDef::Any) => Some(0),
            (Term::Int(_), TypeDef::Int | TypeDef::Num) => Some(0),
            (_, TypeDef::Grammar(ps)) => {
                let p = ps.iter().find(|p| p.matches(t))?;
                let mut n = if p.args.is_empty() { 0 } else { 1 };
                if let Term::App(_, args) = t {
                    for (a, aty) in args.iter().zip(&p.args) {
                        n += self.typed_size(a, aty)?;
                    }
                }
                Some(n)
            }
            _ => None,
        }
    }

    pub fn fmt_typedef(&self, name: &str) -> Option<String> {
        let ps = match self.get(name).ok()? {
            TypeDef::Grammar(ps) => ps,
            _ => return None,
        };
        let alts: Vec<String> = ps.iter().map(|p| p.to_term().to_string()).collect();
        Some(format!("{name} -> {}", alts.join(" ; ")))
    }
}

/// Variable to demanded types, built from antecedent pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    pub demands: BTreeMap<Var, BTreeSet<String>>,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.variable {
            return write!(f, "variable");
        }
        write!(f, "non-variable")?;
        if self.constant {
            write!(f, ", constant")
        } else if self.ground {
            write!(f, ", ground")
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> TypeTable {
        let mut t = TypeTable::prelude();
        t.define("tree", vec![Production::new("leaf", &[]), Production::new("node", &["tree", ANY, "tree"])]).unwrap();
        t
    }

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    #[test]
    fn list_membership() {
        let t = table();
        assert!(t.member(&Term::int_list(&[1, 2]), "list").unwrap());
        assert!(!t.member(&Term::cons(Term::Int(1), v("X")), "list").unwrap());
        assert!(t.member(&v("X"), ANY).unwrap());
        assert!(!t.member(&v("X"), INT).unwrap());
        assert!(t.member(&Term::int_list(&[1]), "numlist").unwrap());
        assert!(t.member(&Term::Int(3), NUM).unwrap());
        assert!(matches!(t.member(&v("X"), "foo"), Err(TypeError::Unknown(_))));
    }

    #[test]
    fn consistency() {
        let t = table();
        assert!(t.type_consistent(&Term::cons(v("X"), v("Bs2")), "numlist").unwrap());
        assert!(!t.type_consistent(&Term::constant("foo"), NUM).unwrap());
        // X cannot be both an integer and a list
        let bad = Term::cons(v("X"), v("X"));
        assert!(!t.type_consistent(&bad, "intlist").unwrap());
        assert!(t.type_consistent(&bad, "list").unwrap());
    }

    #[test]
    fn classification() {
        let t = table();
        assert_eq!(t.classify(INT).unwrap(), Classification { variable: false, ground: true, constant: true });
        assert!(t.classify(ANY).unwrap().variable);
        let tree = t.classify("tree").unwrap();
        assert!(!tree.variable && !tree.ground && !tree.constant);
        assert!(t.classify("intlist").unwrap().ground);
        assert!(!t.classify("intlist").unwrap().constant);
    }

    #[test]
    fn implication() {
        let t = table();
        assert!(t.implies_typing(&[], &[Typed::new(Term::nil(), "list")]));
        let ante = [Typed::new(v("Z"), "list")];
        assert!(t.implies_typing(&ante, &[Typed::new(Term::cons(v("U"), v("Z")), "list")]));
        assert!(!t.implies_typing(&ante, &[Typed::new(v("Z"), "numlist")]));
        // decomposition of a list pattern gives element and tail types
        let ante = [Typed::new(Term::cons(v("X"), v("Xs")), "numlist")];
        assert!(t.implies_typing(&ante, &[Typed::new(v("X"), NUM), Typed::new(v("Xs"), "numlist")]));
        assert!(t.implies_typing(&ante, &[Typed::new(v("X"), ANY)]));
        // unsatisfiable antecedent
        assert!(t.implies_typing(&[Typed::new(Term::constant("foo"), INT)], &[Typed::new(v("Q"), INT)]));
    }

    #[test]
    fn arithmetic_positions() {
        let t = table();
        let ante = [Typed::new(v("N"), INT)];
        let expr = Term::app("-", vec![v("N"), Term::Int(1)]);
        assert!(!t.implies_typing(&ante, &[Typed::new(expr.clone(), INT)]));
        assert!(t.implies_typing(&ante, &[Typed { term: expr.clone(), ty: INT.into(), evaluable: true }]));
        assert!(t.member_eval(&Term::app("-", vec![Term::Int(4), Term::Int(1)]), INT).unwrap());
        assert_eq!(TypeTable::eval(&Term::app("-", vec![Term::Int(4), Term::Int(1)])), Some(3));
    }

    #[test]
    fn subtyping() {
        let t = table();
        assert!(t.is_subtype("intlist", "numlist"));
        assert!(t.is_subtype("numlist", "list"));
        assert!(!t.is_subtype("list", "numlist"));
        assert!(t.is_subtype(INT, NUM));
        assert!(!t.is_subtype(NUM, INT));
        assert!(!t.is_subtype("tree", "list"));
    }

    #[test]
    fn sizes() {
        let t = table();
        assert_eq!(t.typed_size(&Term::int_list(&[1, 2, 3]), "intlist"), Some(3));
        let tr = Term::app("node", vec![Term::constant("leaf"), Term::int_list(&[5, 6]), Term::constant("leaf")]);
        assert_eq!(t.typed_size(&tr, "tree"), Some(1));
    }

    #[test]
    fn validation() {
        let mut t = table();
        assert!(t.validate().is_ok());
        t.define("bad", vec![Production::new("f", &["bad"])]).unwrap();
        assert_eq!(t.validate(), Err(TypeError::Empty("bad".into())));
        let mut t = table();
        t.define("odd", vec![Production::new("g", &["nosuch"])]).unwrap();
        assert_eq!(t.validate(), Err(TypeError::Unknown("nosuch".into())));
        assert!(TypeTable::prelude().define(INT, vec![]).is_err());
    }
}
