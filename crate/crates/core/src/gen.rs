//! Random type-correct queries: ground inputs drawn from the declared types,
//! fresh variables at output positions.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::program::{Program, ProgramError};
use crate::term::{Atom, Pred, Term};
use crate::types::{ProdHead, TypeDef, TypeTable};

pub const MAX_DEPTH: usize = 5;
const CONSTANTS: &[&str] = &["a", "b", "c"];

pub struct QueryGen<'p> {
    prog: &'p Program,
    mode: String,
    rng: ChaCha8Rng,
    pub max_depth: usize,
    /// Inclusive range for integers.
    pub ints: (i64, i64),
    min_depth: HashMap<String, usize>,
    fresh: usize,
}

/// Smallest depth of a ground term of each type; types without finite
/// members are absent.
fn min_depths(table: &TypeTable) -> HashMap<String, usize> {
    let mut out: HashMap<String, usize> = HashMap::new();
    loop {
        let mut changed = false;
        for name in table.names() {
            let d = match table.get(name) {
                Ok(TypeDef::Grammar(ps)) => ps
                    .iter()
                    .filter_map(|p| {
                        let ds: Option<Vec<usize>> = p.args.iter().map(|a| out.get(a).copied()).collect();
                        ds.map(|ds| ds.into_iter().max().map_or(0, |m| m + 1))
                    })
                    .min(),
                Ok(_) => Some(0),
                Err(_) => None,
            };
            if let Some(d) = d {
                if out.get(name).is_none_or(|&old| d < old) {
                    out.insert(name.clone(), d);
                    changed = true;
                }
            }
        }
        if !changed {
            return out;
        }
    }
}

impl<'p> QueryGen<'p> {
    pub fn new(prog: &'p Program, mode: &str, seed: u64) -> Self {
        QueryGen {
            prog,
            mode: mode.to_string(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_depth: MAX_DEPTH,
            ints: (0, 4),
            min_depth: min_depths(&prog.type_table),
            fresh: 0,
        }
    }

    fn int(&mut self) -> Term {
        Term::Int(self.rng.gen_range(self.ints.0..=self.ints.1))
    }

    /// A ground member of `ty` of depth at most `depth`, if one exists.
    pub fn term(&mut self, ty: &str, depth: usize) -> Option<Term> {
        match self.prog.type_table.get(ty).ok()? {
            TypeDef::Int | TypeDef::Num => Some(self.int()),
            TypeDef::Any => Some(if self.rng.gen_bool(0.5) {
                self.int()
            } else {
                Term::constant(CONSTANTS.choose(&mut self.rng).expect("non-empty"))
            }),
            TypeDef::Grammar(ps) => {
                let fits: Vec<_> = ps
                    .iter()
                    .filter(|p| p.args.is_empty() || p.args.iter().all(|a| self.min_depth.get(a).is_some_and(|&d| d < depth)))
                    .cloned()
                    .collect();
                let p = fits.choose(&mut self.rng)?.clone();
                match &p.head {
                    ProdHead::Int(i) => Some(Term::Int(*i)),
                    ProdHead::Functor(f) => {
                        let args: Option<Vec<Term>> = p.args.iter().map(|a| self.term(a, depth.saturating_sub(1))).collect();
                        Some(Term::app(f, args?))
                    }
                }
            }
        }
    }

    fn fresh_var(&mut self) -> Term {
        self.fresh += 1;
        Term::var(&format!("V{}", self.fresh))
    }

    /// An atom for `p` with generated inputs and distinct fresh outputs.
    pub fn atom(&mut self, p: &Pred) -> Result<Atom, ProgramError> {
        let mode = self.prog.mode_of(&self.mode, p)?;
        let types = self.prog.type_of(p)?;
        let mut args = Vec::with_capacity(p.arity);
        for (i, ty) in types.iter().enumerate() {
            let t = if mode.is_input(i) {
                let depth = self.rng.gen_range(0..=self.max_depth);
                match self.term(ty, depth) {
                    Some(t) => t,
                    None => return Err(ProgramError::MissingType(p.clone())),
                }
            } else {
                self.fresh_var()
            };
            args.push(t);
        }
        Ok(Atom::new(&p.name, args))
    }

    /// Defined predicates that have a mode and a type.
    pub fn candidates(&self) -> Vec<Pred> {
        self.prog
            .preds
            .keys()
            .filter(|p| self.prog.mode_of(&self.mode, p).is_ok() && self.prog.type_of(p).is_ok())
            .cloned()
            .collect()
    }

    /// A one-atom query for a predicate chosen uniformly from `preds`.
    pub fn query_from(&mut self, preds: &[Pred]) -> Option<Vec<Atom>> {
        let p = preds.choose(&mut self.rng)?.clone();
        self.atom(&p).ok().map(|a| vec![a])
    }

    pub fn queries(&mut self, n: usize) -> Vec<Vec<Atom>> {
        let preds = self.candidates();
        (0..n).filter_map(|_| self.query_from(&preds)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{Checker, Kind};
    use crate::{corpus, parse_program};

    #[test]
    fn inputs_are_typed_and_bounded() {
        let prog = parse_program(corpus::TREE_LIST).unwrap();
        let mut g = QueryGen::new(&prog, "M1", 3);
        for q in g.queries(200) {
            let a = &q[0];
            let m = prog.mode_of("M1", &a.pred()).unwrap();
            let tys = prog.type_of(&a.pred()).unwrap();
            for i in m.inputs() {
                assert!(a.args[i].is_ground());
                assert!(a.args[i].depth() <= MAX_DEPTH);
                assert!(prog.type_table.member(&a.args[i], &tys[i]).unwrap(), "{a}");
            }
            for i in m.outputs() {
                assert!(a.args[i].is_var());
            }
        }
    }

    #[test]
    fn generated_queries_are_simply_typed() {
        let prog = parse_program(corpus::QSORT).unwrap();
        let checker = Checker::new(&prog, "M1");
        let mut g = QueryGen::new(&prog, "M1", 11);
        for q in g.queries(100) {
            assert!(checker.check_query(Kind::Simply, &q).is_ok(), "{}", q[0]);
        }
    }

    #[test]
    fn same_seed_same_queries() {
        let prog = parse_program(corpus::NQUEENS).unwrap();
        let a = QueryGen::new(&prog, "M1", 5).queries(20);
        let b = QueryGen::new(&prog, "M1", 5).queries(20);
        assert_eq!(a, b);
    }

    #[test]
    fn min_depth_of_lists() {
        let prog = parse_program(corpus::TREE_LIST).unwrap();
        let d = min_depths(&prog.type_table);
        assert_eq!(d["list"], 0);
        assert_eq!(d["int"], 0);
        assert_eq!(d["tree"], 0);
    }
}
