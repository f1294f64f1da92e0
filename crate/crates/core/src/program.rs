//! Definite-clause programs over feature structures.
//!
//! Head and body literals of a clause point into one shared graph; goals
//! and solutions are feature structures whose roots are the literal
//! arguments in order.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::fs::{FeatureStructure, NodeId};
use crate::signature::Signature;
use crate::syntax::RawClause;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredId(pub u32);

/// Stable clause identity; survives deletion of other clauses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClauseId(pub u32);

impl fmt::Display for ClauseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredInfo {
    pub name: String,
    pub arity: usize,
    /// Set by the covariation compiler on automaton-state predicates.
    pub interaction: bool,
}

impl fmt::Display for PredInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub pred: PredId,
    pub args: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub id: ClauseId,
    pub head: Literal,
    pub body: Vec<Literal>,
    /// Roots are the head arguments followed by each body literal's arguments.
    pub graph: FeatureStructure,
}

impl Clause {
    /// Assemble a clause from literal predicates and a graph whose roots are
    /// the flattened argument list. The graph is compacted.
    pub fn from_graph(
        id: ClauseId,
        head: PredId,
        body: &[PredId],
        arities: &[usize],
        graph: FeatureStructure,
    ) -> Clause {
        let graph = graph.compact();
        let roots = graph.roots().to_vec();
        let mut pos = 0;
        let mut take = |pred: PredId, k: usize| {
            let lit = Literal { pred, args: roots[pos..pos + k].to_vec() };
            pos += k;
            lit
        };
        let head = take(head, arities[0]);
        let body = body
            .iter()
            .zip(&arities[1..])
            .map(|(&p, &k)| take(p, k))
            .collect();
        debug_assert_eq!(pos, roots.len());
        Clause { id, head, body, graph }
    }

    pub fn is_unit(&self) -> bool {
        self.body.is_empty()
    }

    /// Root index of the first argument of body literal `i`.
    pub fn body_root_offset(&self, i: usize) -> usize {
        self.head.args.len() + self.body[..i].iter().map(|l| l.args.len()).sum::<usize>()
    }

    /// The feature structure of body literal `i` (its arguments as roots),
    /// detached from the rest of the clause.
    pub fn body_goal_fs(&self, i: usize) -> FeatureStructure {
        self.graph.with_roots(self.body[i].args.clone()).compact()
    }

    pub fn head_fs(&self) -> FeatureStructure {
        self.graph.with_roots(self.head.args.clone()).compact()
    }

    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        std::iter::once(&self.head).chain(self.body.iter())
    }

    fn arities(&self) -> Vec<usize> {
        self.literals().map(|l| l.args.len()).collect()
    }

    /// Fresh copy with a new graph (same literal layout).
    pub fn with_graph(&self, graph: FeatureStructure) -> Clause {
        let body: Vec<PredId> = self.body.iter().map(|l| l.pred).collect();
        Clause::from_graph(self.id, self.head.pred, &body, &self.arities(), graph)
    }

    /// Drop body literal `i`, keeping the graph (and all sharings) intact.
    pub fn without_body_literal(&self, i: usize) -> Clause {
        let mut roots: Vec<NodeId> = self.head.args.clone();
        let mut preds = Vec::new();
        let mut arities = vec![self.head.args.len()];
        for (j, l) in self.body.iter().enumerate() {
            if j != i {
                roots.extend(&l.args);
                preds.push(l.pred);
                arities.push(l.args.len());
            }
        }
        Clause::from_graph(self.id, self.head.pred, &preds, &arities, self.graph.with_roots(roots))
    }

    /// Insert a literal at body position `i`; `args` index into this clause's graph.
    pub fn with_body_literal(&self, i: usize, lit: Literal) -> Clause {
        let mut body = self.body.clone();
        body.insert(i, lit);
        let roots: Vec<NodeId> = self
            .head
            .args
            .iter()
            .chain(body.iter().flat_map(|l| l.args.iter()))
            .copied()
            .collect();
        let preds: Vec<PredId> = body.iter().map(|l| l.pred).collect();
        let arities: Vec<usize> = std::iter::once(self.head.args.len())
            .chain(body.iter().map(|l| l.args.len()))
            .collect();
        Clause::from_graph(self.id, self.head.pred, &preds, &arities, self.graph.with_roots(roots))
    }
}

/// A query: a conjunction of literals over one graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Goal {
    pub literals: Vec<Literal>,
    /// Roots are the flattened literal arguments.
    pub fs: FeatureStructure,
}

impl Goal {
    /// A single-literal goal whose arguments are the roots of `fs`.
    pub fn single(pred: PredId, fs: FeatureStructure) -> Goal {
        let fs = fs.compact();
        let args = fs.roots().to_vec();
        Goal { literals: vec![Literal { pred, args }], fs }
    }

    pub fn conjunction(preds: &[(PredId, usize)], fs: FeatureStructure) -> Goal {
        let fs = fs.compact();
        let roots = fs.roots().to_vec();
        let mut pos = 0;
        let literals = preds
            .iter()
            .map(|&(pred, k)| {
                let l = Literal { pred, args: roots[pos..pos + k].to_vec() };
                pos += k;
                l
            })
            .collect();
        Goal { literals, fs }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProgramMeta {
    /// The lexicon predicate (`lex/1`), when a lexicon was compiled in.
    pub entry_pred: Option<PredId>,
    /// Lexical-rule predicates generated by the covariation compiler.
    pub rule_preds: Vec<PredId>,
    /// The lexicon encoding admits unbounded rule application.
    pub nonterminating: bool,
}

#[derive(Clone, Debug)]
pub struct Program {
    sig: Arc<Signature>,
    preds: Vec<PredInfo>,
    pred_index: HashMap<(String, usize), PredId>,
    clauses: Vec<Clause>,
    by_pred: Vec<Vec<usize>>,
    next_id: u32,
    pub meta: ProgramMeta,
}

impl Program {
    pub fn new(sig: Arc<Signature>) -> Program {
        Program {
            sig,
            preds: Vec::new(),
            pred_index: HashMap::new(),
            clauses: Vec::new(),
            by_pred: Vec::new(),
            next_id: 0,
            meta: ProgramMeta::default(),
        }
    }

    pub fn sig(&self) -> &Signature {
        &self.sig
    }

    pub fn sig_arc(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn intern_pred(&mut self, name: &str, arity: usize) -> PredId {
        if let Some(&p) = self.pred_index.get(&(name.to_string(), arity)) {
            return p;
        }
        let id = PredId(self.preds.len() as u32);
        self.preds.push(PredInfo { name: name.to_string(), arity, interaction: false });
        self.pred_index.insert((name.to_string(), arity), id);
        self.by_pred.push(Vec::new());
        id
    }

    pub fn pred_id(&self, name: &str, arity: usize) -> Option<PredId> {
        self.pred_index.get(&(name.to_string(), arity)).copied()
    }

    pub fn pred(&self, p: PredId) -> &PredInfo {
        &self.preds[p.0 as usize]
    }

    pub fn preds(&self) -> impl Iterator<Item = (PredId, &PredInfo)> {
        self.preds.iter().enumerate().map(|(i, p)| (PredId(i as u32), p))
    }

    pub fn set_interaction(&mut self, p: PredId, flag: bool) {
        self.preds[p.0 as usize].interaction = flag;
    }

    pub fn is_interaction(&self, p: PredId) -> bool {
        self.preds[p.0 as usize].interaction
    }

    /// Append a clause; `graph` roots are the flattened arguments.
    pub fn add_clause(&mut self, head: PredId, body: &[PredId], graph: FeatureStructure) -> ClauseId {
        let id = ClauseId(self.next_id);
        self.next_id += 1;
        let arities: Vec<usize> = std::iter::once(head)
            .chain(body.iter().copied())
            .map(|p| self.pred(p).arity)
            .collect();
        let clause = Clause::from_graph(id, head, body, &arities, graph);
        self.push_clause(clause);
        id
    }

    /// Resolve predicate names of a parsed clause and append it.
    pub fn add_raw_clause(&mut self, raw: &RawClause) -> ClauseId {
        let head = self.intern_pred(&raw.head.name, raw.head.args.len());
        let body: Vec<PredId> = raw.body.iter().map(|l| self.intern_pred(&l.name, l.args.len())).collect();
        self.add_clause(head, &body, raw.graph.clone())
    }

    /// Append an already-built clause, keeping its id.
    pub fn push_clause(&mut self, clause: Clause) {
        self.next_id = self.next_id.max(clause.id.0 + 1);
        self.by_pred[clause.head.pred.0 as usize].push(self.clauses.len());
        self.clauses.push(clause);
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, idx: usize) -> &Clause {
        &self.clauses[idx]
    }

    /// Clause indices for a predicate, in source order.
    pub fn clauses_of(&self, p: PredId) -> &[usize] {
        &self.by_pred[p.0 as usize]
    }

    pub fn clause_index(&self, id: ClauseId) -> Option<usize> {
        // Clauses are appended with increasing ids, so this stays sorted.
        self.clauses.binary_search_by_key(&id, |c| c.id).ok()
    }

    pub fn clause_by_id(&self, id: ClauseId) -> Option<&Clause> {
        self.clause_index(id).map(|i| &self.clauses[i])
    }

    pub fn replace_clause(&mut self, clause: Clause) {
        let idx = self.clause_index(clause.id).expect("clause to replace");
        assert_eq!(self.clauses[idx].head.pred, clause.head.pred);
        self.clauses[idx] = clause;
    }

    pub fn remove_clause(&mut self, id: ClauseId) -> Option<Clause> {
        let idx = self.clause_index(id)?;
        let removed = self.clauses.remove(idx);
        self.reindex();
        Some(removed)
    }

    fn reindex(&mut self) {
        for list in &mut self.by_pred {
            list.clear();
        }
        for (i, c) in self.clauses.iter().enumerate() {
            self.by_pred[c.head.pred.0 as usize].push(i);
        }
    }

    pub fn next_clause_id(&self) -> u32 {
        self.next_id
    }

    /// Restore the id counter after deserialization.
    pub fn set_next_clause_id(&mut self, next: u32) {
        self.next_id = self.next_id.max(next);
    }

    /// Predicates called somewhere but never defined.
    pub fn undefined_preds(&self) -> Vec<PredId> {
        let mut out: Vec<PredId> = self
            .clauses
            .iter()
            .flat_map(|c| c.body.iter().map(|l| l.pred))
            .filter(|p| self.by_pred[p.0 as usize].is_empty())
            .collect();
        out.sort();
        out.dedup();
        out
    }
}
