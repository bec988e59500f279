//! Programs: clauses grouped by predicate plus block, mode and type declarations.

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;

use crate::builtins;
use crate::term::{Atom, BlockDecl, Clause, Permutation, Pred};
use crate::types::TypeTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Dir {
    In,
    Out,
}

/// One direction per argument position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Mode(pub Vec<Dir>);

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        s.chars()
            .map(|c| match c {
                'i' | 'I' => Some(Dir::In),
                'o' | 'O' => Some(Dir::Out),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Mode)
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn inputs(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, d)| **d == Dir::In).map(|(i, _)| i)
    }

    pub fn outputs(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, d)| **d == Dir::Out).map(|(i, _)| i)
    }

    pub fn is_input(&self, i: usize) -> bool {
        self.0.get(i) == Some(&Dir::In)
    }

    pub fn fmt_for(&self, name: &str) -> String {
        let marks: Vec<&str> = self.0.iter().map(|d| if *d == Dir::In { "i" } else { "o" }).collect();
        format!("{}({})", crate::term::quoted_name(name), marks.join(","))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            write!(f, "{}", if *d == Dir::In { "I" } else { "O" })?;
        }
        Ok(())
    }
}

/// An immutable program. Clauses keep their textual order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Program {
    pub clauses: Vec<Clause>,
    /// Defined predicates in order of first appearance, with clause indices.
    pub preds: IndexMap<Pred, Vec<usize>>,
    /// Exactly one entry per defined predicate, possibly empty.
    pub blocks: IndexMap<Pred, BlockDecl>,
    /// Named modes, each mapping predicates to directions.
    pub modes: IndexMap<String, IndexMap<Pred, Mode>>,
    pub types: IndexMap<Pred, Vec<String>>,
    pub type_table: TypeTable,
    /// Queries given with `%:- query`.
    pub queries: Vec<Query>,
}

/// A stored query, optionally tied to one mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub mode: Option<String>,
    pub atoms: Vec<Atom>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProgramError {
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("no mode declared for {pred} in mode {mode}")]
    MissingMode { pred: Pred, mode: String },
    #[error("no type declared for {0}")]
    MissingType(Pred),
    #[error("clause {clause} has {len} body atoms but the reordering has length {perm}")]
    PermutationLength { clause: usize, len: usize, perm: usize },
}

impl Program {
    pub fn is_defined(&self, p: &Pred) -> bool {
        self.preds.contains_key(p)
    }

    pub fn is_builtin(&self, p: &Pred) -> bool {
        !self.is_defined(p) && builtins::spec(p).is_some()
    }

    pub fn clauses_of(&self, p: &Pred) -> impl Iterator<Item = (usize, &Clause)> {
        self.preds.get(p).into_iter().flatten().map(move |&i| (i, &self.clauses[i]))
    }

    pub fn block(&self, p: &Pred) -> BlockDecl {
        self.blocks.get(p).cloned().unwrap_or_default()
    }

    pub fn mode_names(&self) -> impl Iterator<Item = &String> {
        self.modes.keys()
    }

    /// Mode of `p`, falling back to the built-in default.
    pub fn mode_of(&self, mode: &str, p: &Pred) -> Result<Mode, ProgramError> {
        let table = self.modes.get(mode).ok_or_else(|| ProgramError::UnknownMode(mode.to_string()))?;
        if let Some(m) = table.get(p) {
            return Ok(m.clone());
        }
        builtins::spec(p)
            .filter(|_| !self.is_defined(p))
            .map(|s| s.mode())
            .ok_or_else(|| ProgramError::MissingMode { pred: p.clone(), mode: mode.to_string() })
    }

    pub fn type_of(&self, p: &Pred) -> Result<Vec<String>, ProgramError> {
        if let Some(t) = self.types.get(p) {
            return Ok(t.clone());
        }
        builtins::spec(p)
            .filter(|_| !self.is_defined(p))
            .map(|s| s.types())
            .ok_or_else(|| ProgramError::MissingType(p.clone()))
    }

    /// Every predicate used anywhere: defined ones first, then built-ins.
    pub fn all_preds(&self) -> Vec<Pred> {
        let mut out: Vec<Pred> = self.preds.keys().cloned().collect();
        let used = self.clauses.iter().flat_map(|c| c.body.iter()).chain(self.queries.iter().flat_map(|q| q.atoms.iter()));
        for a in used {
            let p = a.pred();
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Stored queries that apply to `mode`.
    pub fn queries_for<'a>(&'a self, mode: &'a str) -> impl Iterator<Item = &'a [Atom]> + 'a {
        self.queries.iter().filter(move |q| q.mode.as_deref().is_none_or(|m| m == mode)).map(|q| q.atoms.as_slice())
    }

    pub fn builtins_used(&self) -> Vec<Pred> {
        self.all_preds().into_iter().filter(|p| self.is_builtin(p)).collect()
    }

    /// `pred#k`, with k the 1-based position among the predicate's clauses.
    pub fn clause_label(&self, idx: usize) -> String {
        let p = self.clauses[idx].head.pred();
        let k = self.preds[&p].iter().position(|&i| i == idx).map_or(0, |k| k + 1);
        format!("{p}#{k}")
    }

    /// Same program with the given clause bodies reordered.
    pub fn reorder(&self, reordering: &BTreeMap<usize, Permutation>) -> Result<Program, ProgramError> {
        let mut out = self.clone();
        for (&idx, pi) in reordering {
            let c = &mut out.clauses[idx];
            if pi.len() != c.body.len() {
                return Err(ProgramError::PermutationLength { clause: idx, len: c.body.len(), perm: pi.len() });
            }
            c.body = pi.apply(&c.body);
        }
        Ok(out)
    }

    /// Same program with `p`'s block declaration replaced.
    pub fn with_block(&self, p: &Pred, decl: BlockDecl) -> Program {
        let mut out = self.clone();
        out.blocks.insert(p.clone(), decl);
        out
    }
}
