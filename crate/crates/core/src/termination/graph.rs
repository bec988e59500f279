//! Predicate dependency graph: refers-to edges, strongly connected components
//! and the depends-on closure.

use std::collections::{BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::Dfs;

use crate::program::Program;
use crate::term::Pred;

#[derive(Clone, Debug)]
pub struct DependencyGraph {
    graph: DiGraph<Pred, ()>,
    index: HashMap<Pred, NodeIndex>,
    /// Components ordered callees first.
    sccs: Vec<Vec<Pred>>,
    scc_of: HashMap<Pred, usize>,
}

impl DependencyGraph {
    pub fn new(prog: &Program) -> Self {
        let mut graph = DiGraph::new();
        let mut index = HashMap::new();
        for p in prog.all_preds() {
            let n = graph.add_node(p.clone());
            index.insert(p, n);
        }
        for c in &prog.clauses {
            let h = index[&c.head.pred()];
            for a in &c.body {
                let b = index[&a.pred()];
                if !graph.contains_edge(h, b) {
                    graph.add_edge(h, b, ());
                }
            }
        }
        // tarjan_scc yields components in reverse topological order
        let sccs: Vec<Vec<Pred>> = tarjan_scc(&graph)
            .into_iter()
            .map(|comp| {
                let mut ps: Vec<Pred> = comp.into_iter().map(|n| graph[n].clone()).collect();
                ps.sort_by_key(|p| index[p]);
                ps
            })
            .collect();
        let scc_of = sccs.iter().enumerate().flat_map(|(i, c)| c.iter().map(move |p| (p.clone(), i))).collect();
        DependencyGraph { graph, index, sccs, scc_of }
    }

    pub fn preds(&self) -> impl Iterator<Item = &Pred> {
        self.graph.node_weights()
    }

    /// Strongly connected components, each after all components it depends on.
    pub fn sccs(&self) -> &[Vec<Pred>] {
        &self.sccs
    }

    pub fn scc_index(&self, p: &Pred) -> Option<usize> {
        self.scc_of.get(p).copied()
    }

    /// The class `[p]≈`.
    pub fn class_of(&self, p: &Pred) -> &[Pred] {
        self.scc_index(p).map_or(&[], |i| &self.sccs[i])
    }

    pub fn refers_to(&self, p: &Pred, q: &Pred) -> bool {
        match (self.index.get(p), self.index.get(q)) {
            (Some(&a), Some(&b)) => self.graph.contains_edge(a, b),
            _ => false,
        }
    }

    /// `p ≈ q`: mutual dependence.
    pub fn equivalent(&self, p: &Pred, q: &Pred) -> bool {
        p == q || (self.scc_index(p).is_some() && self.scc_index(p) == self.scc_index(q))
    }

    /// `p ⊒ q`: reflexive-transitive closure of refers-to.
    pub fn depends_on(&self, p: &Pred, q: &Pred) -> bool {
        p == q || self.cone(p).contains(q)
    }

    /// `p ⊐ q`: depends on but not equivalent.
    pub fn strictly_above(&self, p: &Pred, q: &Pred) -> bool {
        self.depends_on(p, q) && !self.equivalent(p, q)
    }

    /// All q with `p ⊒ q`, including p.
    pub fn cone(&self, p: &Pred) -> BTreeSet<Pred> {
        let mut out = BTreeSet::from([p.clone()]);
        if let Some(&start) = self.index.get(p) {
            let mut dfs = Dfs::new(&self.graph, start);
            while let Some(n) = dfs.next(&self.graph) {
                out.insert(self.graph[n].clone());
            }
        }
        out
    }

    /// All q with `q ⊒ p`, including p.
    pub fn dependents(&self, p: &Pred) -> BTreeSet<Pred> {
        self.preds().filter(|q| self.depends_on(q, p)).cloned().collect()
    }

    /// Predicates directly referred to from `p`'s component but outside it.
    pub fn successors_outside(&self, scc: usize) -> BTreeSet<Pred> {
        let mut out = BTreeSet::new();
        for p in &self.sccs[scc] {
            for n in self.graph.neighbors(self.index[p]) {
                let q = &self.graph[n];
                if self.scc_of[q] != scc {
                    out.insert(q.clone());
                }
            }
        }
        out
    }

    /// Whether some clause for a member of the component calls back into it.
    pub fn is_recursive(&self, scc: usize) -> bool {
        let comp = &self.sccs[scc];
        comp.len() > 1 || comp.iter().any(|p| self.refers_to(p, p))
    }
}
