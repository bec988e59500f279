//! Delay-respecting resolution with block declarations.
//!
//! The query lives in an arena of nodes threaded by three doubly linked
//! lists: textual order, the non-waiting atoms in textual order, and the
//! order given by the derived permutation. All mutations go through a trail
//! so that backtracking restores the exact previous state.

mod monitor;
#[cfg(test)]
mod tests;

pub use monitor::{monitor, MonitorConfig, MonitorReport, MonitorViolation};

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::builtins::{self, BuiltinClass};
use crate::program::{Mode, Program};
use crate::term::{Atom, BlockDecl, BlockMark, Permutation, Pred, Subst, Term, Var};
use crate::types::is_arith_op;

/// Order among selectable waiting atoms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WakePolicy {
    /// Most recently woken first, FIFO among atoms woken by the same step.
    #[default]
    NewlyWokenFirst,
    /// Most recently woken first, LIFO among atoms woken by the same step.
    LatestSuspendedFirst,
    LeftmostWaitingFirst,
}

impl std::str::FromStr for WakePolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "newly-woken-first" | "fifo" => Ok(WakePolicy::NewlyWokenFirst),
            "latest-suspended-first" | "lifo" => Ok(WakePolicy::LatestSuspendedFirst),
            "leftmost-waiting-first" | "leftmost" => Ok(WakePolicy::LeftmostWaitingFirst),
            _ => Err(format!("unknown wake policy `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    /// Leftmost atom, ignoring block declarations.
    Ld,
    LeftBased(WakePolicy),
    /// Uniform among selectable atoms, from a seeded stream.
    Random(u64),
}

impl Default for SelectionRule {
    fn default() -> Self {
        SelectionRule::LeftBased(WakePolicy::default())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Limits {
    /// Resolution steps over the whole search tree.
    pub steps: u64,
    pub solutions: Option<usize>,
}

pub const DEFAULT_STEP_LIMIT: u64 = 100_000;

impl Default for Limits {
    fn default() -> Self {
        Limits { steps: DEFAULT_STEP_LIMIT, solutions: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Success,
    /// Every branch failed finitely.
    Failure,
    /// No solution, and some branch ended with no selectable atom.
    Floundered,
    LimitExceeded,
    InstantiationError,
    TypeError,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Success => "success",
            Status::Failure => "failure",
            Status::Floundered => "floundered",
            Status::LimitExceeded => "limit_exceeded",
            Status::InstantiationError => "instantiation_error",
            Status::TypeError => "type_error",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One resolution step. Positions are 1-based in the query the atom was
/// selected from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub step: u64,
    pub index: usize,
    pub pi_position: usize,
    /// `pred#k` for program clauses, `name/arity` for built-ins.
    pub clause: String,
    #[serde(serialize_with = "as_display")]
    pub atom: Atom,
    pub waiting: Vec<usize>,
}

fn as_display<T: fmt::Display, S: serde::Serializer>(t: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(t)
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w: Vec<String> = self.waiting.iter().map(|i| i.to_string()).collect();
        write!(f, "{} {} {} {} [{}] {}", self.step, self.index, self.pi_position, self.clause, w.join(","), self.atom)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub rule: SelectionRule,
    pub limits: Limits,
    pub trace: bool,
    /// Unification without occur check may build cyclic bindings; off only on request.
    pub no_occur_check: bool,
    /// Mode used to orient variable-variable bindings: at input positions the
    /// clause variable is bound, at output positions the query variable.
    pub mode: Option<String>,
    /// Initial permutation of the query, identity when absent.
    pub query_order: Option<Permutation>,
    /// Body permutations by clause index, identity when absent.
    pub clause_orders: HashMap<usize, Permutation>,
}

impl RunOptions {
    pub fn with_rule(rule: SelectionRule) -> Self {
        RunOptions { rule, ..Default::default() }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    /// Answers restricted to the query variables, in the order found.
    pub solutions: Vec<Subst>,
    pub status: Status,
    pub steps: u64,
    /// Branches that ended with no selectable atom.
    pub flounders: u64,
    pub trace: Option<Vec<TraceStep>>,
    pub error: Option<String>,
    pub monitor: Option<MonitorReport>,
}

/// True iff some pattern of `decl` has a variable in each of its `-` positions.
pub fn is_blocked(a: &Atom, decl: &BlockDecl) -> bool {
    decl.blocks(&a.args)
}

/// Runs `query` against `prog` depth-first.
pub fn run(prog: &Program, query: &[Atom], opts: &RunOptions) -> Outcome {
    let mut e = Engine::new(prog, query, opts, None);
    e.search();
    e.finish()
}

/// Selected atom with its index, π-position and waiting list, taken before the step.
type TracePre = (Atom, (usize, usize, Vec<usize>));

const TEXT: usize = 0;
const FREE: usize = 1;
const PI: usize = 2;
const PREV: usize = 0;
const NEXT: usize = 1;
const HEAD: usize = 0;
/// Generation used when no clause is involved in a unification.
const NO_CLAUSE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Flags {
    alive: bool,
    waiting: bool,
    suspend: u64,
    woken: u64,
}

struct Node {
    atom: Atom,
    link: [[usize; 2]; 3],
    flags: Flags,
}

enum Undo {
    Bind(Var),
    Link { list: usize, node: usize, dir: usize, old: usize },
    Flags(usize, Flags),
    Suspended(Var),
    ReadyAdded(usize),
    ReadyRemoved(usize),
    Tracked(bool),
}

struct Choice {
    mark: usize,
    arena: usize,
    node: usize,
    pred: Pred,
    next: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Prefer {
    Clause,
    Query,
}

enum BuiltinError {
    Instantiation(String),
    Type(String),
}

struct Engine<'a> {
    prog: &'a Program,
    opts: &'a RunOptions,
    decls: HashMap<Pred, BlockDecl>,
    modes: HashMap<Pred, Mode>,
    nodes: Vec<Node>,
    bindings: HashMap<Var, Term>,
    trail: Vec<Undo>,
    /// Waiting atoms known to be selectable.
    ready: BTreeSet<usize>,
    /// Waiting blocked atoms, by the variables whose binding may unblock them.
    susp: HashMap<Var, Vec<usize>>,
    choices: Vec<Choice>,
    gen: u32,
    seq: u64,
    stamp: u64,
    steps: u64,
    flounders: u64,
    rng: Option<ChaCha8Rng>,
    trace: Option<Vec<TraceStep>>,
    qvars: Vec<Var>,
    solutions: Vec<Subst>,
    halt: Option<(Status, Option<String>)>,
    monitor: Option<monitor::State<'a>>,
}

impl<'a> Engine<'a> {
    fn new(prog: &'a Program, query: &[Atom], opts: &'a RunOptions, monitor: Option<monitor::State<'a>>) -> Self {
        let decls = prog.blocks.iter().filter(|(_, d)| !d.is_empty()).map(|(p, d)| (p.clone(), d.clone())).collect();
        let mut modes = HashMap::new();
        if let Some(m) = &opts.mode {
            for p in prog.all_preds().into_iter().chain(query.iter().map(|a| a.pred())) {
                if let Ok(md) = prog.mode_of(m, &p) {
                    modes.insert(p, md);
                }
            }
        }
        let rng = match opts.rule {
            SelectionRule::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        let sentinel = Node {
            atom: Atom::new("$head", Vec::new()),
            link: [[HEAD; 2]; 3],
            flags: Flags { alive: false, waiting: false, suspend: 0, woken: 0 },
        };
        let mut qvars = Vec::new();
        query.iter().for_each(|a| a.args.iter().for_each(|t| t.collect_vars(&mut qvars)));
        let mut seen = BTreeSet::new();
        qvars.retain(|v| seen.insert(v.clone()));
        let mut e = Engine {
            prog,
            opts,
            decls,
            modes,
            nodes: vec![sentinel],
            bindings: HashMap::new(),
            trail: Vec::new(),
            ready: BTreeSet::new(),
            susp: HashMap::new(),
            choices: Vec::new(),
            gen: query.iter().flat_map(|a| a.vars()).map(|v| v.gen).max().unwrap_or(0),
            seq: 0,
            stamp: 0,
            steps: 0,
            flounders: 0,
            rng,
            trace: opts.trace.then(Vec::new),
            qvars,
            solutions: Vec::new(),
            halt: None,
            monitor,
        };
        let ids: Vec<usize> = query.iter().map(|a| e.push_node(a.clone(), false)).collect();
        let pi_ids = match &opts.query_order {
            Some(pi) if pi.len() == ids.len() => pi.order().iter().map(|&j| ids[j - 1]).collect(),
            _ => ids.clone(),
        };
        e.thread(TEXT, HEAD, HEAD, &ids);
        e.thread(FREE, HEAD, HEAD, &ids);
        e.thread(PI, HEAD, HEAD, &pi_ids);
        e
    }

    fn push_node(&mut self, atom: Atom, waiting: bool) -> usize {
        let suspend = if waiting {
            self.seq += 1;
            self.seq
        } else {
            0
        };
        self.nodes.push(Node { atom, link: [[HEAD; 2]; 3], flags: Flags { alive: true, waiting, suspend, woken: 0 } });
        self.nodes.len() - 1
    }

    // ---- trailed mutation ----

    fn set_link(&mut self, list: usize, node: usize, dir: usize, to: usize) {
        let old = self.nodes[node].link[list][dir];
        self.trail.push(Undo::Link { list, node, dir, old });
        self.nodes[node].link[list][dir] = to;
    }

    fn set_flags(&mut self, node: usize, f: Flags) {
        self.trail.push(Undo::Flags(node, self.nodes[node].flags));
        self.nodes[node].flags = f;
    }

    fn bind(&mut self, v: &Var, t: Term) {
        self.bindings.insert(v.clone(), t);
        self.trail.push(Undo::Bind(v.clone()));
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().expect("trail non-empty") {
                Undo::Bind(v) => {
                    self.bindings.remove(&v);
                }
                Undo::Link { list, node, dir, old } => self.nodes[node].link[list][dir] = old,
                Undo::Flags(n, f) => self.nodes[n].flags = f,
                Undo::Suspended(v) => {
                    if let Some(l) = self.susp.get_mut(&v) {
                        l.pop();
                    }
                }
                Undo::ReadyAdded(n) => {
                    self.ready.remove(&n);
                }
                Undo::ReadyRemoved(n) => {
                    self.ready.insert(n);
                }
                Undo::Tracked(b) => {
                    if let Some(m) = self.monitor.as_mut() {
                        m.tracked = b;
                    }
                }
            }
        }
    }

    // ---- list plumbing ----

    fn next(&self, list: usize, n: usize) -> usize {
        self.nodes[n].link[list][NEXT]
    }

    /// Links fresh nodes `ids` between `before` and `after` (untrailed for the
    /// fresh nodes, trailed for the neighbours).
    fn thread(&mut self, list: usize, before: usize, after: usize, ids: &[usize]) {
        for (i, &id) in ids.iter().enumerate() {
            self.nodes[id].link[list][PREV] = if i == 0 { before } else { ids[i - 1] };
            self.nodes[id].link[list][NEXT] = if i + 1 == ids.len() { after } else { ids[i + 1] };
        }
        let (first, last) = match (ids.first(), ids.last()) {
            (Some(&f), Some(&l)) => (f, l),
            _ => (after, before),
        };
        self.set_link(list, before, NEXT, first);
        self.set_link(list, after, PREV, last);
    }

    fn unlink(&mut self, list: usize, n: usize) {
        let [p, q] = self.nodes[n].link[list];
        self.set_link(list, p, NEXT, q);
        self.set_link(list, q, PREV, p);
    }

    fn text_nodes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut n = self.next(TEXT, HEAD);
        while n != HEAD {
            out.push(n);
            n = self.next(TEXT, n);
        }
        out
    }

    fn position(&self, list: usize, target: usize) -> usize {
        let mut n = self.next(list, HEAD);
        let mut i = 1;
        while n != HEAD && n != target {
            n = self.next(list, n);
            i += 1;
        }
        i
    }

    // ---- terms ----

    fn deref<'t>(&'t self, mut t: &'t Term) -> &'t Term {
        while let Term::Var(v) = t {
            match self.bindings.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    fn resolve(&self, t: &Term) -> Term {
        match self.deref(t) {
            Term::App(name, args) if !args.is_empty() => {
                Term::App(name.clone(), args.iter().map(|a| self.resolve(a)).collect::<Vec<_>>().into())
            }
            other => other.clone(),
        }
    }

    fn resolve_atom(&self, a: &Atom) -> Atom {
        Atom { name: a.name.clone(), args: a.args.iter().map(|t| self.resolve(t)).collect() }
    }

    fn occurs(&self, x: &Var, t: &Term) -> bool {
        match self.deref(t) {
            Term::Var(v) => v == x,
            Term::Int(_) => false,
            Term::App(_, args) => args.iter().any(|a| self.occurs(x, a)),
        }
    }

    fn bind_checked(&mut self, x: &Var, t: Term) -> bool {
        if !self.opts.no_occur_check && self.occurs(x, &t) {
            return false;
        }
        self.bind(x, t);
        true
    }

    /// `a` is the query side, `b` the clause side; clause variables have
    /// generation `gen`.
    fn unify(&mut self, a: &Term, b: &Term, prefer: Prefer, gen: u32) -> bool {
        let a = self.deref(a).clone();
        let b = self.deref(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), Term::Var(y)) => {
                let bind_y = match prefer {
                    Prefer::Clause => y.gen == gen,
                    Prefer::Query => x.gen == gen && y.gen != gen,
                };
                if bind_y {
                    self.bind(y, a.clone());
                } else {
                    self.bind(x, b.clone());
                }
                true
            }
            (Term::Var(x), _) => self.bind_checked(x, b.clone()),
            (_, Term::Var(y)) => self.bind_checked(y, a.clone()),
            (Term::Int(i), Term::Int(j)) => i == j,
            (Term::App(f, xs), Term::App(g, ys)) if f == g && xs.len() == ys.len() => {
                xs.iter().zip(ys.iter()).all(|(x, y)| self.unify(x, y, prefer, gen))
            }
            _ => false,
        }
    }

    fn unify_head(&mut self, q: &Atom, h: &Atom, gen: u32) -> bool {
        if q.args.len() != h.args.len() {
            return false;
        }
        match self.modes.get(&q.pred()).cloned() {
            Some(m) => {
                m.inputs().all(|i| self.unify(&q.args[i], &h.args[i], Prefer::Clause, gen))
                    && m.outputs().all(|i| self.unify(&q.args[i], &h.args[i], Prefer::Query, gen))
            }
            None => q.args.iter().zip(&h.args).all(|(x, y)| self.unify(x, y, Prefer::Clause, gen)),
        }
    }

    // ---- delays ----

    fn blocked(&self, a: &Atom) -> bool {
        match self.decls.get(&a.pred()) {
            None => false,
            Some(d) => d.patterns.iter().any(|p| p.iter().zip(&a.args).all(|(m, t)| *m == BlockMark::Any || self.deref(t).is_var())),
        }
    }

    fn selectable(&self, n: usize) -> bool {
        !self.blocked(&self.nodes[n].atom)
    }

    /// Registers a waiting blocked atom on the variables of its blocking patterns.
    fn suspend(&mut self, n: usize) {
        let Some(d) = self.decls.get(&self.nodes[n].atom.pred()) else { return };
        let mut vars = BTreeSet::new();
        for p in &d.patterns {
            let args = &self.nodes[n].atom.args;
            let ts: Vec<&Term> = p.iter().zip(args).filter(|(m, _)| **m == BlockMark::Var).map(|(_, t)| self.deref(t)).collect();
            if ts.iter().all(|t| t.is_var()) {
                vars.extend(ts.into_iter().filter_map(|t| t.as_var().cloned()));
            }
        }
        for v in vars {
            self.susp.entry(v.clone()).or_default().push(n);
            self.trail.push(Undo::Suspended(v));
        }
    }

    fn make_ready(&mut self, n: usize) {
        let f = Flags { woken: self.stamp, ..self.nodes[n].flags };
        self.set_flags(n, f);
        self.ready.insert(n);
        self.trail.push(Undo::ReadyAdded(n));
    }

    /// Waiting atoms affected by bindings made since `from` are rechecked.
    fn wake(&mut self, from: usize) {
        let mut cands: Vec<usize> = Vec::new();
        for u in &self.trail[from..] {
            if let Undo::Bind(v) = u {
                if let Some(l) = self.susp.get(v) {
                    cands.extend(l);
                }
            }
        }
        cands.sort_unstable();
        cands.dedup();
        for n in cands {
            let f = self.nodes[n].flags;
            if !f.alive || !f.waiting || self.ready.contains(&n) {
                continue;
            }
            if self.selectable(n) {
                self.make_ready(n);
            } else {
                self.suspend(n);
            }
        }
    }

    fn make_waiting(&mut self, n: usize) {
        self.unlink(FREE, n);
        self.seq += 1;
        let f = Flags { waiting: true, suspend: self.seq, ..self.nodes[n].flags };
        self.set_flags(n, f);
        self.suspend(n);
    }

    /// Some ready atom lies textually before `n`.
    fn ready_before(&self, n: usize) -> bool {
        let mut c = self.next(TEXT, HEAD);
        while c != HEAD && c != n {
            if self.ready.contains(&c) {
                return true;
            }
            c = self.next(TEXT, c);
        }
        false
    }

    /// Every atom in the maximal prefix without selectable atoms becomes waiting.
    fn update_waiting(&mut self) {
        loop {
            let n = self.next(FREE, HEAD);
            if n == HEAD || self.selectable(n) || (!self.ready.is_empty() && self.ready_before(n)) {
                break;
            }
            self.make_waiting(n);
        }
    }

    fn select(&mut self) -> Option<usize> {
        let first = self.next(TEXT, HEAD);
        match self.opts.rule {
            SelectionRule::Ld => Some(first),
            SelectionRule::Random(_) => {
                let cands: Vec<usize> = self.text_nodes().into_iter().filter(|&n| self.selectable(n)).collect();
                if cands.is_empty() {
                    return None;
                }
                let i = self.rng.as_mut().expect("random rule has an rng").gen_range(0..cands.len());
                Some(cands[i])
            }
            SelectionRule::LeftBased(policy) => {
                if !self.ready.is_empty() {
                    let key = |n: &usize| {
                        let f = self.nodes[*n].flags;
                        (f.woken, f.suspend)
                    };
                    return match policy {
                        WakePolicy::NewlyWokenFirst => {
                            self.ready.iter().copied().max_by_key(|n| (key(n).0, std::cmp::Reverse(key(n).1)))
                        }
                        WakePolicy::LatestSuspendedFirst => self.ready.iter().copied().max_by_key(key),
                        WakePolicy::LeftmostWaitingFirst => {
                            let mut c = first;
                            while !self.ready.contains(&c) {
                                c = self.next(TEXT, c);
                            }
                            Some(c)
                        }
                    };
                }
                let n = self.next(FREE, HEAD);
                (n != HEAD && self.selectable(n)).then_some(n)
            }
        }
    }

    // ---- resolution ----

    /// Replaces node `k` by `body`, ordered by `rho` in the π list.
    fn replace(&mut self, k: usize, body: Vec<Atom>, rho: Option<&Permutation>) {
        let kf = self.nodes[k].flags;
        self.set_flags(k, Flags { alive: false, ..kf });
        if self.ready.remove(&k) {
            self.trail.push(Undo::ReadyRemoved(k));
        }
        let ids: Vec<usize> = body.into_iter().map(|a| self.push_node(a, kf.waiting)).collect();
        let [tp, tn] = self.nodes[k].link[TEXT];
        self.thread(TEXT, tp, tn, &ids);
        let [pp, pn] = self.nodes[k].link[PI];
        let pi_ids: Vec<usize> = match rho {
            Some(r) if r.len() == ids.len() => r.order().iter().map(|&j| ids[j - 1]).collect(),
            _ => ids.clone(),
        };
        self.thread(PI, pp, pn, &pi_ids);
        if kf.waiting {
            for &n in &ids {
                if self.selectable(n) {
                    self.make_ready(n);
                } else {
                    self.suspend(n);
                }
            }
        } else {
            let [fp, fnx] = self.nodes[k].link[FREE];
            self.thread(FREE, fp, fnx, &ids);
        }
    }

    /// Index, π-position and waiting set of the current query, for tracing.
    fn trace_context(&self, k: usize) -> (usize, usize, Vec<usize>) {
        let waiting = self.text_nodes().iter().enumerate().filter(|(_, &n)| self.nodes[n].flags.waiting).map(|(i, _)| i + 1).collect();
        (self.position(TEXT, k), self.position(PI, k), waiting)
    }

    /// Bookkeeping shared by clause and built-in steps once unification has
    /// succeeded. Returns false when the step budget is exhausted.
    fn commit(&mut self, k: usize, label: String, body: Vec<Atom>, rho: Option<&Permutation>, pre: Option<TracePre>) -> bool {
        if self.steps >= self.opts.limits.steps {
            self.halt = Some((Status::LimitExceeded, None));
            return false;
        }
        self.steps += 1;
        self.stamp += 1;
        if let (Some(tr), Some((atom, (index, pi_position, waiting)))) = (self.trace.as_mut(), pre) {
            tr.push(TraceStep { step: self.steps, index, pi_position, clause: label, atom, waiting });
        }
        self.replace(k, body, rho);
        true
    }

    fn trace_pre(&self, k: usize) -> Option<TracePre> {
        self.trace.as_ref().map(|_| (self.resolve_atom(&self.nodes[k].atom), self.trace_context(k)))
    }

    fn try_clause(&mut self, k: usize, ci: usize) -> bool {
        self.gen += 1;
        let c = self.prog.clauses[ci].with_generation(self.gen);
        let pre = self.trace_pre(k);
        let mon = self.monitor_pre(k, Some(&c.body), Some(ci));
        let mark = self.trail.len();
        let q = self.nodes[k].atom.clone();
        if !self.unify_head(&q, &c.head, self.gen) {
            return false;
        }
        let rho = self.opts.clause_orders.get(&ci);
        if !self.commit(k, self.prog.clause_label(ci), c.body, rho, pre) {
            return true;
        }
        self.wake(mark);
        self.monitor_post(k, mon, mark);
        true
    }

    fn eval(&self, t: &Term, goal: &Atom) -> Result<i64, BuiltinError> {
        match self.deref(t) {
            Term::Var(_) => Err(BuiltinError::Instantiation(format!("unbound argument in `{}`", self.resolve_atom(goal)))),
            Term::Int(i) => Ok(*i),
            Term::App(f, a) if is_arith_op(f, a.len()) => {
                let x = self.eval(&a[0], goal)?;
                let r = if a.len() == 1 {
                    x.checked_neg()
                } else {
                    let y = self.eval(&a[1], goal)?;
                    match &**f {
                        "+" => x.checked_add(y),
                        "-" => x.checked_sub(y),
                        _ => x.checked_mul(y),
                    }
                };
                r.ok_or_else(|| BuiltinError::Type(format!("integer overflow in `{}`", self.resolve_atom(goal))))
            }
            other => Err(BuiltinError::Type(format!("`{}` is not a number in `{}`", self.resolve(other), self.resolve_atom(goal)))),
        }
    }

    /// Runs a built-in. `Ok(false)` is plain failure.
    fn call_builtin(&mut self, k: usize) -> Result<bool, BuiltinError> {
        let goal = self.nodes[k].atom.clone();
        let spec = builtins::spec(&goal.pred()).expect("caller checked built-in");
        let pre = self.trace_pre(k);
        let mon = self.monitor_pre(k, None, None);
        let mark = self.trail.len();
        let ok = match spec.class {
            BuiltinClass::Eval => {
                let v = self.eval(&goal.args[1], &goal)?;
                self.unify(&goal.args[0], &Term::Int(v), Prefer::Query, NO_CLAUSE)
            }
            BuiltinClass::Compare => {
                let x = self.eval(&goal.args[0], &goal)?;
                let y = self.eval(&goal.args[1], &goal)?;
                match spec.name {
                    "<" => x < y,
                    "=<" => x <= y,
                    ">" => x > y,
                    _ => x != y,
                }
            }
            BuiltinClass::Unify => self.unify(&goal.args[0], &goal.args[1], Prefer::Query, NO_CLAUSE),
        };
        if !ok {
            return Ok(false);
        }
        let label = format!("{}/{}", spec.name, spec.dirs.len());
        if self.commit(k, label, Vec::new(), None, pre) {
            self.wake(mark);
            self.monitor_post(k, mon, mark);
        }
        Ok(true)
    }

    /// Tries the remaining clauses of the innermost choice point.
    fn resume(&mut self) -> bool {
        loop {
            let Some(top) = self.choices.last_mut() else { return false };
            let Some(clauses) = self.prog.preds.get(&top.pred) else { return false };
            if top.next >= clauses.len() {
                return false;
            }
            let ci = clauses[top.next];
            top.next += 1;
            let (mark, arena, k) = (top.mark, top.arena, top.node);
            self.undo_to(mark);
            self.nodes.truncate(arena);
            if self.try_clause(k, ci) {
                return true;
            }
        }
    }

    fn backtrack(&mut self) -> bool {
        while !self.choices.is_empty() {
            if self.resume() {
                return true;
            }
            self.choices.pop();
        }
        false
    }

    fn search(&mut self) {
        loop {
            if self.halt.is_some() {
                return;
            }
            if self.next(TEXT, HEAD) == HEAD {
                let answer = Subst::from_bindings(self.qvars.iter().map(|v| (v.clone(), self.resolve(&Term::Var(v.clone())))));
                self.solutions.push(answer);
                if self.opts.limits.solutions.is_some_and(|n| self.solutions.len() >= n) {
                    return;
                }
                if !self.backtrack() {
                    return;
                }
                continue;
            }
            self.update_waiting();
            let Some(k) = self.select() else {
                self.flounders += 1;
                if !self.backtrack() {
                    return;
                }
                continue;
            };
            let pred = self.nodes[k].atom.pred();
            if self.prog.is_builtin(&pred) {
                match self.call_builtin(k) {
                    Ok(true) => {}
                    Ok(false) => {
                        if !self.backtrack() {
                            return;
                        }
                    }
                    Err(BuiltinError::Instantiation(msg)) => self.halt = Some((Status::InstantiationError, Some(msg))),
                    Err(BuiltinError::Type(msg)) => self.halt = Some((Status::TypeError, Some(msg))),
                }
                continue;
            }
            self.choices.push(Choice { mark: self.trail.len(), arena: self.nodes.len(), node: k, pred, next: 0 });
            if !self.backtrack() {
                return;
            }
        }
    }

    fn finish(self) -> Outcome {
        let (status, error) = match self.halt {
            Some(h) => h,
            None if !self.solutions.is_empty() => (Status::Success, None),
            None if self.flounders > 0 => (Status::Floundered, None),
            None => (Status::Failure, None),
        };
        Outcome {
            solutions: self.solutions,
            status,
            steps: self.steps,
            flounders: self.flounders,
            trace: self.trace,
            error,
            monitor: self.monitor.map(|m| m.report),
        }
    }
}
