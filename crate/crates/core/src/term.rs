//! Terms, atoms, clauses, substitutions and unification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

/// A logic variable. `gen` is bumped by renaming apart; source variables have `gen == 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Arc<str>,
    pub gen: u32,
}

impl Var {
    pub fn new(name: &str) -> Self {
        Var { name: Arc::from(name), gen: 0 }
    }

    pub fn with_gen(&self, gen: u32) -> Self {
        Var { name: self.name.clone(), gen }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.gen == 0 {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}_{}", self.name, self.gen)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    /// Integers are constants with their own lexical class.
    Int(i64),
    /// Compound term; constants have no arguments.
    App(Arc<str>, Arc<[Term]>),
}

pub const NIL: &str = "[]";
pub const CONS: &str = ".";

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::new(name))
    }

    pub fn constant(name: &str) -> Term {
        Term::App(Arc::from(name), Arc::from(Vec::new()))
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(Arc::from(name), Arc::from(args))
    }

    pub fn nil() -> Term {
        Term::constant(NIL)
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::app(CONS, vec![head, tail])
    }

    /// Builds `[items | tail]`.
    pub fn list(items: Vec<Term>, tail: Term) -> Term {
        items.into_iter().rev().fold(tail, |acc, t| Term::cons(t, acc))
    }

    pub fn int_list(items: &[i64]) -> Term {
        Term::list(items.iter().map(|&i| Term::Int(i)).collect(), Term::nil())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Int(_) => true,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Int(_) => true,
            Term::App(_, args) => args.is_empty(),
        }
    }

    /// A variable, or a compound whose arguments are distinct variables.
    pub fn is_flat(&self) -> bool {
        match self {
            Term::Var(_) | Term::Int(_) => true,
            Term::App(_, args) => {
                let mut seen = BTreeSet::new();
                args.iter().all(|a| matches!(a, Term::Var(v) if seen.insert(v.clone())))
            }
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => out.push(v.clone()),
            Term::Int(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut v = Vec::new();
        self.collect_vars(&mut v);
        v.into_iter().collect()
    }

    pub fn occurs(&self, x: &Var) -> bool {
        match self {
            Term::Var(v) => v == x,
            Term::Int(_) => false,
            Term::App(_, args) => args.iter().any(|a| a.occurs(x)),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::App(_, args) if !args.is_empty() => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::App(f, args) => Some((f, args.len())),
            _ => None,
        }
    }

    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Int(_) => self.clone(),
            Term::App(name, args) => Term::App(name.clone(), args.iter().map(|a| a.map_vars(f)).collect::<Vec<_>>().into()),
        }
    }
}

fn is_plain_name(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_lowercase()) && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_symbol_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| "+-*/\\^<>=~:.?@#&$".contains(c))
}

/// `s` as it must be written in source, quoted when needed.
pub fn quoted_name(s: &str) -> String {
    struct Name<'a>(&'a str);
    impl fmt::Display for Name<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            fmt_name(self.0, f)
        }
    }
    Name(s).to_string()
}

pub(crate) fn fmt_name(s: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if is_plain_name(s) || is_symbol_name(s) || s == NIL {
        write!(f, "{s}")
    } else {
        write!(f, "'{}'", s.replace('\'', "\\'"))
    }
}

/// Priority of the fixed infix operators, used for printing.
pub fn infix_priority(name: &str) -> Option<u32> {
    match name {
        "is" | "<" | "=<" | ">" | "=\\=" | "=" => Some(700),
        "+" | "-" => Some(500),
        "*" => Some(400),
        _ => None,
    }
}

impl Term {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, max: u32) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Int(i) => {
                if *i < 0 && max < 999 {
                    write!(f, "({i})")
                } else {
                    write!(f, "{i}")
                }
            }
            Term::App(name, args) if &**name == CONS && args.len() == 2 => {
                write!(f, "[")?;
                args[0].fmt_prec(f, 999)?;
                let mut tail = &args[1];
                loop {
                    match tail {
                        Term::App(n, a) if &**n == CONS && a.len() == 2 => {
                            write!(f, ",")?;
                            a[0].fmt_prec(f, 999)?;
                            tail = &a[1];
                        }
                        Term::App(n, a) if &**n == NIL && a.is_empty() => break,
                        other => {
                            write!(f, "|")?;
                            other.fmt_prec(f, 999)?;
                            break;
                        }
                    }
                }
                write!(f, "]")
            }
            Term::App(name, args) if args.len() == 2 && infix_priority(name).is_some() => {
                let p = infix_priority(name).unwrap();
                let open = p > max;
                if open {
                    write!(f, "(")?;
                }
                // xfx for comparisons, yfx for + and -
                let (lp, rp) = if p == 700 { (699, 699) } else { (p, p - 1) };
                args[0].fmt_prec(f, lp)?;
                if is_plain_name(name) || p == 700 {
                    write!(f, " {name} ")?;
                } else {
                    write!(f, "{name}")?;
                }
                args[1].fmt_prec(f, rp)?;
                if open {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Term::App(name, args) => {
                fmt_name(name, f)?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        a.fmt_prec(f, 999)?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 1200)
    }
}

/// Predicate symbol `name/arity`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pred {
    pub name: Arc<str>,
    pub arity: usize,
}

impl Pred {
    pub fn new(name: &str, arity: usize) -> Self {
        Pred { name: Arc::from(name), arity }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

impl Serialize for Pred {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub name: Arc<str>,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(name: &str, args: Vec<Term>) -> Self {
        Atom { name: Arc::from(name), args }
    }

    pub fn pred(&self) -> Pred {
        Pred { name: self.name.clone(), arity: self.args.len() }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut v = Vec::new();
        self.args.iter().for_each(|a| a.collect_vars(&mut v));
        v.into_iter().collect()
    }

    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Atom {
        Atom { name: self.name.clone(), args: self.args.iter().map(|a| a.map_vars(f)).collect() }
    }

    pub fn as_term(&self) -> Term {
        Term::App(self.name.clone(), self.args.clone().into())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.as_term().fmt(f)
    }
}

pub fn query_vars(q: &[Atom]) -> BTreeSet<Var> {
    q.iter().flat_map(|a| a.vars()).collect()
}

pub fn fmt_query(q: &[Atom]) -> String {
    q.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Clone, Debug, Eq)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<Atom>,
    /// Source line, not part of structural equality.
    pub line: u32,
}

impl PartialEq for Clause {
    fn eq(&self, other: &Self) -> bool {
        self.head == other.head && self.body == other.body
    }
}

impl Clause {
    pub fn new(head: Atom, body: Vec<Atom>) -> Self {
        Clause { head, body, line: 0 }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut s = self.head.vars();
        for a in &self.body {
            s.extend(a.vars());
        }
        s
    }

    /// Renames every variable to generation `gen`.
    pub fn with_generation(&self, gen: u32) -> Clause {
        let mut f = |v: &Var| Term::Var(v.with_gen(gen));
        Clause {
            head: self.head.map_vars(&mut f),
            body: self.body.iter().map(|a| a.map_vars(&mut f)).collect(),
            line: self.line,
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            write!(f, " :- {}", fmt_query(&self.body))?;
        }
        write!(f, ".")
    }
}

/// Returns a variant of `c` sharing no variable with `avoid`.
pub fn rename_apart(c: &Clause, avoid: &BTreeSet<Var>) -> Clause {
    let vars = c.vars();
    if vars.is_disjoint(avoid) {
        return c.clone();
    }
    let gen = avoid.iter().chain(vars.iter()).map(|v| v.gen).max().unwrap_or(0) + 1;
    c.with_generation(gen)
}

/// True iff no variable occurs twice across the vector.
pub fn is_linear(ts: &[Term]) -> bool {
    let mut seen = BTreeSet::new();
    let mut all = Vec::new();
    ts.iter().for_each(|t| t.collect_vars(&mut all));
    all.into_iter().all(|v| seen.insert(v))
}

/// First variable found twice in the vector, if any.
pub fn repeated_var(ts: &[Term]) -> Option<Var> {
    let mut seen = BTreeSet::new();
    let mut all = Vec::new();
    ts.iter().for_each(|t| t.collect_vars(&mut all));
    all.into_iter().find(|v| !seen.insert(v.clone()))
}

/// Idempotent substitution.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subst {
    map: BTreeMap<Var, Term>,
}

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    /// Builds a substitution from bindings; callers are responsible for idempotence.
    pub fn from_bindings(bindings: impl IntoIterator<Item = (Var, Term)>) -> Self {
        let map = bindings.into_iter().filter(|(v, t)| t.as_var() != Some(v)).collect();
        Subst { map }
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.iter()
    }

    pub fn domain(&self) -> BTreeSet<Var> {
        self.map.keys().cloned().collect()
    }

    pub fn range_vars(&self) -> BTreeSet<Var> {
        self.map.values().flat_map(|t| t.vars()).collect()
    }

    pub fn is_idempotent(&self) -> bool {
        self.domain().is_disjoint(&self.range_vars())
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.map.is_empty() {
            return t.clone();
        }
        match t {
            Term::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Int(_) => t.clone(),
            Term::App(name, args) => Term::App(name.clone(), args.iter().map(|a| self.apply(a)).collect::<Vec<_>>().into()),
        }
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom { name: a.name.clone(), args: a.args.iter().map(|t| self.apply(t)).collect() }
    }

    pub fn apply_query(&self, q: &[Atom]) -> Vec<Atom> {
        q.iter().map(|a| self.apply_atom(a)).collect()
    }

    /// `self` followed by `other` (apply `self` first).
    pub fn compose(&self, other: &Subst) -> Subst {
        let mut map: BTreeMap<Var, Term> = BTreeMap::new();
        for (v, t) in &self.map {
            let t2 = other.apply(t);
            if t2.as_var() != Some(v) {
                map.insert(v.clone(), t2);
            }
        }
        for (v, t) in &other.map {
            if !self.map.contains_key(v) {
                map.insert(v.clone(), t.clone());
            }
        }
        Subst { map }
    }

    /// Restriction onto the given variables.
    pub fn restrict(&self, vars: &BTreeSet<Var>) -> Subst {
        Subst { map: self.map.iter().filter(|(v, _)| vars.contains(v)).map(|(v, t)| (v.clone(), t.clone())).collect() }
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v} = {t}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum UnifyError {
    #[error("not unifiable")]
    Failure,
    #[error("cyclic term for variable {0}")]
    CyclicTerm(Var),
}

struct Unifier {
    bindings: BTreeMap<Var, Term>,
    occur_check: bool,
}

impl Unifier {
    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.bindings.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    fn occurs(&self, x: &Var, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(v) => v == x,
            Term::Int(_) => false,
            Term::App(_, args) => args.iter().any(|a| self.occurs(x, a)),
        }
    }

    fn bind(&mut self, x: &Var, t: &Term) -> Result<(), UnifyError> {
        if self.occurs(x, t) {
            return Err(if self.occur_check { UnifyError::Failure } else { UnifyError::CyclicTerm(x.clone()) });
        }
        self.bindings.insert(x.clone(), t.clone());
        Ok(())
    }

    fn unify(&mut self, a: &Term, b: &Term) -> Result<(), UnifyError> {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => Ok(()),
            // left side is the query side: its variable gets bound to the clause term
            (Term::Var(x), _) => self.bind(x, &b),
            (_, Term::Var(y)) => self.bind(y, &a),
            (Term::Int(i), Term::Int(j)) if i == j => Ok(()),
            (Term::App(f, xs), Term::App(g, ys)) if f == g && xs.len() == ys.len() => {
                for (x, y) in xs.iter().zip(ys.iter()) {
                    self.unify(x, y)?;
                }
                Ok(())
            }
            _ => Err(UnifyError::Failure),
        }
    }

    fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::App(name, args) => Term::App(name.clone(), args.iter().map(|a| self.resolve(a)).collect::<Vec<_>>().into()),
            other => other.clone(),
        }
    }

    fn finish(self) -> Subst {
        let map = self
            .bindings
            .keys()
            .map(|v| (v.clone(), self.resolve(&Term::Var(v.clone()))))
            .filter(|(v, t)| t.as_var() != Some(v))
            .collect();
        Subst { map }
    }
}

/// Most general unifier of two term vectors, pairwise.
pub fn unify_terms(a: &[Term], b: &[Term], occur_check: bool) -> Result<Subst, UnifyError> {
    if a.len() != b.len() {
        return Err(UnifyError::Failure);
    }
    let mut u = Unifier { bindings: BTreeMap::new(), occur_check };
    for (x, y) in a.iter().zip(b) {
        u.unify(x, y)?;
    }
    Ok(u.finish())
}

/// MGU of two atoms. `a` is treated as the query side for variable orientation.
pub fn unify(a: &Atom, b: &Atom, occur_check: bool) -> Result<Subst, UnifyError> {
    if a.name != b.name || a.args.len() != b.args.len() {
        return Err(UnifyError::Failure);
    }
    unify_terms(&a.args, &b.args, occur_check)
}

/// 1-based permutation written `<π(1),…,π(n)>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Permutation {
    image: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PermutationError {
    #[error("not a bijection on 1..{0}")]
    NotBijection(usize),
    #[error("index {index} out of range 1..{len}")]
    OutOfRange { index: usize, len: usize },
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self, PermutationError> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &i in &image {
            if i == 0 || i > n || seen[i - 1] {
                return Err(PermutationError::NotBijection(n));
            }
            seen[i - 1] = true;
        }
        Ok(Permutation { image })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { image: (1..=n).collect() }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    /// π(i), with π(i) = i outside 1..n.
    pub fn at(&self, i: usize) -> usize {
        if i >= 1 && i <= self.image.len() {
            self.image[i - 1]
        } else {
            i
        }
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &p)| p == i + 1)
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.image.len()];
        for (i, &p) in self.image.iter().enumerate() {
            inv[p - 1] = i + 1;
        }
        Permutation { image: inv }
    }

    /// π(o_1,…,o_n) = o_{π⁻¹(1)},…,o_{π⁻¹(n)}.
    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        assert_eq!(items.len(), self.len(), "permutation length mismatch");
        self.inverse().image.iter().map(|&j| items[j - 1].clone()).collect()
    }

    /// The execution order: indices (1-based) of atoms sorted by their π value.
    pub fn order(&self) -> Vec<usize> {
        self.inverse().image
    }

    /// Permutation of a resolvent obtained by replacing the `k`-th atom of a
    /// π-ordered query with a body ordered by ρ.
    pub fn derived(pi: &Permutation, rho: &Permutation, k: usize) -> Result<Permutation, PermutationError> {
        let n = pi.len();
        let m = rho.len();
        if k < 1 || k > n {
            return Err(PermutationError::OutOfRange { index: k, len: n });
        }
        let pk = pi.at(k);
        let mut image = Vec::with_capacity(n + m - 1);
        for i in 1..n + m {
            let v = if i < k {
                if pi.at(i) < pk {
                    pi.at(i)
                } else {
                    pi.at(i) + m - 1
                }
            } else if i < k + m {
                pk + rho.at(i - k + 1) - 1
            } else {
                let p = pi.at(i + 1 - m);
                if p < pk {
                    p
                } else {
                    p + m - 1
                }
            };
            image.push(v);
        }
        Permutation::new(image)
    }

    /// `i` is safe when every atom placed earlier by π is also textually earlier.
    pub fn is_safe_position(&self, i: usize) -> bool {
        let pi_i = self.at(i);
        (1..=self.len()).all(|j| self.at(j) >= pi_i || j < i)
    }

    /// All permutations of 1..n in lexicographic order of their image.
    pub fn all(n: usize) -> Vec<Permutation> {
        fn go(n: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Permutation>) {
            if cur.len() == n {
                out.push(Permutation { image: cur.clone() });
                return;
            }
            for v in 1..=n {
                if !used[v - 1] {
                    used[v - 1] = true;
                    cur.push(v);
                    go(n, cur, used, out);
                    cur.pop();
                    used[v - 1] = false;
                }
            }
        }
        let mut out = Vec::new();
        go(n, &mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.image.iter().map(|i| i.to_string()).collect();
        write!(f, "<{}>", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BlockMark {
    /// `?`
    Any,
    /// `-`: blocks while the argument is a variable
    Var,
}

/// A block declaration: a set of patterns over `?`/`-`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BlockDecl {
    pub patterns: Vec<Vec<BlockMark>>,
}

impl BlockDecl {
    pub fn empty() -> Self {
        BlockDecl::default()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Blocked iff some pattern has a variable in each of its `-` positions.
    pub fn blocks(&self, args: &[Term]) -> bool {
        self.patterns.iter().any(|p| p.iter().zip(args).all(|(m, t)| *m == BlockMark::Any || t.is_var()))
    }

    /// Same check over a var/non-var abstraction (`true` = variable).
    pub fn blocks_abstract(&self, is_var: &[bool]) -> bool {
        self.patterns.iter().any(|p| p.iter().zip(is_var).all(|(m, v)| *m == BlockMark::Any || *v))
    }

    pub fn fmt_for(&self, name: &str) -> String {
        let pats: Vec<String> = self
            .patterns
            .iter()
            .map(|p| {
                let marks: Vec<&str> = p.iter().map(|m| if *m == BlockMark::Var { "-" } else { "?" }).collect();
                format!("{}({})", quoted_name(name), marks.join(","))
            })
            .collect();
        pats.join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    #[test]
    fn fact_head_match() {
        let q = Atom::new("append", vec![Term::nil(), Term::int_list(&[1]), v("Z")]);
        let h = Atom::new("append", vec![Term::nil(), v("Y"), v("Y")]);
        let s = unify(&q, &h, true).unwrap();
        assert_eq!(s.get(&Var::new("Y")), Some(&Term::int_list(&[1])));
        assert_eq!(s.get(&Var::new("Z")), Some(&Term::int_list(&[1])));
        assert!(s.is_idempotent());
    }

    #[test]
    fn delete_empty_list_not_unifiable() {
        let q = Atom::new("delete", vec![v("A"), Term::nil(), v("B")]);
        let h = Atom::new("delete", vec![v("X"), Term::cons(v("X"), v("Z")), v("Z")]);
        assert_eq!(unify(&q, &h, true), Err(UnifyError::Failure));
    }

    #[test]
    fn occur_check_modes() {
        let a = Atom::new("p", vec![v("X")]);
        let b = Atom::new("p", vec![Term::app("f", vec![v("X")])]);
        assert_eq!(unify(&a, &b, true), Err(UnifyError::Failure));
        assert_eq!(unify(&a, &b, false), Err(UnifyError::CyclicTerm(Var::new("X"))));
    }

    #[test]
    fn query_variable_bound_to_clause_variable() {
        let a = Atom::new("p", vec![v("X")]);
        let b = Atom::new("p", vec![Term::Var(Var::new("Y").with_gen(1))]);
        let s = unify(&a, &b, true).unwrap();
        assert_eq!(s.domain().into_iter().collect::<Vec<_>>(), vec![Var::new("X")]);
    }

    #[test]
    fn apply_and_identity() {
        let s = Subst::from_bindings([(Var::new("X"), Term::int_list(&[1]))]);
        let a = Atom::new("permute", vec![v("X"), v("Z")]);
        assert_eq!(s.apply_atom(&a).to_string(), "permute([1],Z)");
        assert_eq!(Subst::new().apply_atom(&a), a);
    }

    #[test]
    fn rename_apart_simple() {
        let c = Clause::new(Atom::new("p", vec![v("X")]), vec![Atom::new("q", vec![v("X")])]);
        let avoid: BTreeSet<Var> = [Var::new("X")].into_iter().collect();
        let r = rename_apart(&c, &avoid);
        assert!(r.vars().is_disjoint(&avoid));
        assert_eq!(r.head.args[0], r.body[0].args[0]);
        let g = Clause::new(Atom::new("p", vec![Term::Int(1)]), vec![]);
        assert_eq!(rename_apart(&g, &avoid), g);
    }

    #[test]
    fn linearity() {
        assert!(is_linear(&[v("X"), Term::cons(v("Y"), v("Z"))]));
        // inputs of delete(X,[X|Z],Z) in mode delete(I,I,O)
        assert!(!is_linear(&[v("X"), Term::cons(v("X"), v("Z"))]));
    }

    #[test]
    fn derived_permutation_example() {
        let pi = Permutation::new(vec![4, 3, 1, 2]).unwrap();
        let rho = Permutation::new(vec![2, 1]).unwrap();
        let d = Permutation::derived(&pi, &rho, 2).unwrap();
        assert_eq!(d.image(), &[5, 4, 3, 1, 2]);
        assert!(Permutation::derived(&pi, &rho, 5).is_err());
        let id = Permutation::derived(&Permutation::identity(3), &Permutation::identity(2), 3).unwrap();
        assert!(id.is_identity());
    }

    #[test]
    fn derived_with_fact_clause() {
        let pi = Permutation::new(vec![2, 3, 1]).unwrap();
        let d = Permutation::derived(&pi, &Permutation::identity(0), 1).unwrap();
        assert_eq!(d.image(), &[2, 1]);
    }

    #[test]
    fn safe_positions() {
        let id = Permutation::identity(4);
        assert!((1..=4).all(|i| id.is_safe_position(i)));
        let p = Permutation::new(vec![1, 3, 2]).unwrap();
        assert!(p.is_safe_position(1));
        assert!(!p.is_safe_position(2));
        assert!(p.is_safe_position(3));
        let q = Permutation::new(vec![2, 1]).unwrap();
        assert!(!q.is_safe_position(1));
        assert!(q.is_safe_position(2));
    }

    #[test]
    fn apply_permutation() {
        let p = Permutation::new(vec![2, 1]).unwrap();
        assert_eq!(p.apply(&["a", "b"]), vec!["b", "a"]);
        let p = Permutation::new(vec![1, 3, 2]).unwrap();
        assert_eq!(p.apply(&["s", "f", "p"]), vec!["s", "p", "f"]);
    }

    #[test]
    fn block_checks() {
        let d = BlockDecl { patterns: vec![vec![BlockMark::Var, BlockMark::Any, BlockMark::Var], vec![BlockMark::Any, BlockMark::Var, BlockMark::Var]] };
        let two_y = Term::cons(Term::Int(2), v("Y"));
        assert!(d.blocks(&[v("X"), two_y.clone(), v("Z")]));
        assert!(!d.blocks(&[v("X"), two_y, Term::cons(Term::Int(1), v("Z"))]));
        assert!(!BlockDecl::empty().blocks(&[v("X")]));
    }

    #[test]
    fn display_lists_and_ops() {
        let t = Term::list(vec![Term::Int(1), v("X")], v("T"));
        assert_eq!(t.to_string(), "[1,X|T]");
        let e = Term::app("is", vec![v("N1"), Term::app("-", vec![v("N"), Term::Int(1)])]);
        assert_eq!(e.to_string(), "N1 is N-1");
        let nested = Term::app("-", vec![v("A"), Term::app("-", vec![v("B"), v("C")])]);
        assert_eq!(nested.to_string(), "A-(B-C)");
    }
}
