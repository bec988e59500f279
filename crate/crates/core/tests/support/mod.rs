//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use blockcheck::modes::{Checker, Kind};
use blockcheck::term::Permutation;
use blockcheck::{Atom, Term, Var};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------- unification

fn subst_term(s: &BTreeMap<Var, Term>, t: &Term) -> Term {
    match t {
        Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Int(_) => t.clone(),
        Term::App(f, args) => Term::app(f, args.iter().map(|a| subst_term(s, a)).collect()),
    }
}

fn occurs(x: &Var, t: &Term) -> bool {
    match t {
        Term::Var(v) => v == x,
        Term::Int(_) => false,
        Term::App(_, args) => args.iter().any(|a| occurs(x, a)),
    }
}

/// Textbook equation-rewriting unification with occur check. The solved
/// form is kept fully applied, so the result is idempotent by construction.
pub fn naive_mgu(a: &Term, b: &Term) -> Option<BTreeMap<Var, Term>> {
    let mut sigma: BTreeMap<Var, Term> = BTreeMap::new();
    let mut eqs = vec![(a.clone(), b.clone())];
    while let Some((s, t)) = eqs.pop() {
        let s = subst_term(&sigma, &s);
        let t = subst_term(&sigma, &t);
        if s == t {
            continue;
        }
        match (&s, &t) {
            (Term::Var(x), _) | (_, Term::Var(x)) => {
                let other = if s.as_var() == Some(x) { &t } else { &s };
                if occurs(x, other) {
                    return None;
                }
                let one: BTreeMap<Var, Term> = [(x.clone(), other.clone())].into_iter().collect();
                for v in sigma.values_mut() {
                    *v = subst_term(&one, v);
                }
                sigma.insert(x.clone(), other.clone());
            }
            (Term::App(f, xs), Term::App(g, ys)) if f == g && xs.len() == ys.len() => {
                eqs.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
            _ => return None,
        }
    }
    Some(sigma)
}

pub fn apply(s: &BTreeMap<Var, Term>, t: &Term) -> Term {
    subst_term(s, t)
}

/// Equal up to a bijective renaming of variables.
pub fn is_variant(a: &Term, b: &Term) -> bool {
    fn go(a: &Term, b: &Term, fwd: &mut HashMap<Var, Var>, bwd: &mut HashMap<Var, Var>) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => {
                let f = fwd.entry(x.clone()).or_insert_with(|| y.clone()) == y;
                let g = bwd.entry(y.clone()).or_insert_with(|| x.clone()) == x;
                f && g
            }
            (Term::Int(i), Term::Int(j)) => i == j,
            (Term::App(f, xs), Term::App(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| go(x, y, fwd, bwd))
            }
            _ => false,
        }
    }
    go(a, b, &mut HashMap::new(), &mut HashMap::new())
}

const FUNCTORS: &[(&str, usize)] = &[("a", 0), ("b", 0), ("f", 1), ("g", 2), ("h", 3)];
const VARS: &[&str] = &["X", "Y", "Z", "W"];

pub fn random_term(rng: &mut ChaCha8Rng, depth: usize) -> Term {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..4) {
            0 => Term::Int(rng.gen_range(0..2)),
            1 => Term::constant(FUNCTORS[rng.gen_range(0..2)].0),
            _ => Term::var(VARS[rng.gen_range(0..VARS.len())]),
        };
    }
    let (f, n) = FUNCTORS[rng.gen_range(2..FUNCTORS.len())];
    Term::app(f, (0..n).map(|_| random_term(rng, depth - 1)).collect())
}

/// Copy of `t` with some subterms replaced, so that the pair is unifiable
/// more often than two independent draws.
pub fn perturb(rng: &mut ChaCha8Rng, t: &Term, depth: usize) -> Term {
    if rng.gen_bool(0.2) {
        return random_term(rng, depth.min(2));
    }
    match t {
        Term::App(f, args) if !args.is_empty() => {
            Term::app(f, args.iter().map(|a| perturb(rng, a, depth.saturating_sub(1))).collect())
        }
        _ => t.clone(),
    }
}

// ---------------------------------------------------------------- permutations

/// The derived permutation read off the π-order directly: list the atoms in
/// π order, splice the body in ρ order in place of atom `k`, and number the
/// resolvent's atoms by their place in that list.
pub fn derived_by_order(pi: &[usize], rho: &[usize], k: usize) -> Vec<usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum Slot {
        Old(usize),
        New(usize),
    }
    let n = pi.len();
    let m = rho.len();
    let mut by_pi: Vec<usize> = (1..=n).collect();
    by_pi.sort_by_key(|&i| pi[i - 1]);
    let mut body: Vec<usize> = (1..=m).collect();
    body.sort_by_key(|&j| rho[j - 1]);
    let mut order: Vec<Slot> = Vec::new();
    for i in by_pi {
        if i == k {
            order.extend(body.iter().map(|&j| Slot::New(j)));
        } else {
            order.push(Slot::Old(i));
        }
    }
    let mut text: Vec<Slot> = (1..k).map(Slot::Old).collect();
    text.extend((1..=m).map(Slot::New));
    text.extend((k + 1..=n).map(Slot::Old));
    text.iter().map(|s| order.iter().position(|o| o == s).unwrap() + 1).collect()
}

/// Whether any of the n! orders satisfies the condition.
pub fn witness_exists(ch: &Checker, kind: Kind, head: Option<&Atom>, body: &[Atom]) -> bool {
    Permutation::all(body.len()).iter().any(|pi| ch.check_with(kind, head, body, pi).is_ok())
}

// ---------------------------------------------------------------- types

/// Ground members of each type up to a depth bound, built by applying
/// productions bottom up. Integer types range over `ints`.
pub struct Enumeration {
    pub sets: HashMap<String, HashSet<Term>>,
}

pub fn enumerate_types(tt: &blockcheck::TypeTable, names: &[&str], ints: &[i64], depth: usize) -> Enumeration {
    use blockcheck::types::{ProdHead, TypeDef};
    let mut sets: HashMap<String, HashSet<Term>> = HashMap::new();
    for _ in 0..=depth {
        let prev = sets.clone();
        for &name in names {
            let mut out: HashSet<Term> = HashSet::new();
            match tt.get(name).unwrap() {
                TypeDef::Int | TypeDef::Num => out.extend(ints.iter().map(|&i| Term::Int(i))),
                TypeDef::Any => panic!("`any` has no finite enumeration"),
                TypeDef::Grammar(ps) => {
                    for p in ps {
                        match &p.head {
                            ProdHead::Int(i) => {
                                out.insert(Term::Int(*i));
                            }
                            ProdHead::Functor(f) => {
                                let mut tuples: Vec<Vec<Term>> = vec![vec![]];
                                for a in &p.args {
                                    let empty = HashSet::new();
                                    let members = prev.get(a.as_str()).unwrap_or(&empty);
                                    tuples = tuples
                                        .into_iter()
                                        .flat_map(|t| {
                                            members.iter().map(move |m| {
                                                let mut t = t.clone();
                                                t.push(m.clone());
                                                t
                                            })
                                        })
                                        .collect();
                                }
                                out.extend(tuples.into_iter().map(|args| Term::app(f, args)));
                            }
                        }
                    }
                }
            }
            sets.insert(name.to_string(), out);
        }
    }
    Enumeration { sets }
}

/// Grammar types with finite, small enumerations to depth 4, plus the
/// integer range their members use.
pub fn type_fixture() -> (blockcheck::TypeTable, Vec<&'static str>, Vec<i64>) {
    let src = "%:- typedef nat -> z ; s(nat).\n\
               %:- typedef even -> z ; s(odd).\n\
               %:- typedef odd -> s(even).\n\
               %:- typedef bin -> leaf ; fork(bin,bin).\n\
               %:- typedef ilist -> nil ; cell(int,ilist).\n\
               %:- typedef bit -> 0 ; 1.\n\
               %:- typedef mix -> pair(bit,nat) ; wrap(intlist) ; none ; 2.\n\
               %:- type p(nat).\np(z).\n";
    let tt = blockcheck::parse_program(src).unwrap().type_table;
    (tt, vec!["int", "nat", "even", "odd", "bin", "ilist", "bit", "mix", "intlist"], vec![0, 1, 2])
}

/// Random terms over the fixture's signature, mostly ill-typed.
pub fn type_probe(rng: &mut ChaCha8Rng, depth: usize) -> Term {
    const LEAVES: &[&str] = &["z", "leaf", "nil", "none", "[]", "a"];
    const NODES: &[(&str, usize)] = &[("s", 1), ("fork", 2), ("cell", 2), ("pair", 2), ("wrap", 1), (".", 2), ("s", 2)];
    if depth == 0 || rng.gen_bool(0.35) {
        return match rng.gen_range(0..5) {
            0 => Term::Int(rng.gen_range(0..3)),
            1 => Term::var("X"),
            _ => Term::constant(LEAVES[rng.gen_range(0..LEAVES.len())]),
        };
    }
    let (f, n) = NODES[rng.gen_range(0..NODES.len())];
    Term::app(f, (0..n).map(|_| type_probe(rng, depth - 1)).collect())
}

// ---------------------------------------------------------------- queens

/// A list of n column numbers with no two queens attacking each other.
pub fn is_queens(t: &Term, n: usize) -> bool {
    let mut cols = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::App(f, args) if &**f == "." && args.len() == 2 => match &args[0] {
                Term::Int(i) => {
                    cols.push(*i);
                    cur = &args[1];
                }
                _ => return false,
            },
            Term::App(f, args) if &**f == "[]" && args.is_empty() => break,
            _ => return false,
        }
    }
    cols.len() == n
        && cols.iter().all(|&c| c >= 1 && c <= n as i64)
        && (0..n).all(|i| (i + 1..n).all(|j| cols[i] != cols[j] && (cols[i] - cols[j]).abs() != (j - i) as i64))
}
