//! SLD interpreters: plain, depth-bounded, and specialized for recursive
//! interaction clauses.
//!
//! A [`Solver`] is a pull-based enumeration. It keeps one [`Store`] for the
//! whole session, a persistent goal list, and a stack of choice points that
//! remember where to resume and which store mark to undo to.

use std::collections::HashSet;
use std::rc::Rc;

use smallvec::SmallVec;
use thiserror::Error;

use crate::fs::FeatureStructure;
use crate::program::{Clause, ClauseId, Goal, PredId, Program};
use crate::store::{Mark, Store};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Depth-first, leftmost selection, source clause order. May not terminate.
    Plain,
    /// A literal at depth `>= max` succeeds without instantiating anything and
    /// the solution is flagged partial.
    DepthBounded { max: u32 },
    /// Recursive interaction clauses are used with their rule call removed;
    /// `aux_depth` optionally bounds the other predicates.
    Specialized { aux_depth: Option<u32> },
}

#[derive(Clone, Debug, Default)]
pub struct SolveConfig {
    pub mode: Option<Mode>,
    /// Give up with [`SolveError::StepLimit`] after this many unification attempts.
    pub step_limit: Option<u64>,
    /// Maximum number of rule-applying interaction clauses on one branch.
    /// Branches that would exceed it fail (no partial solution).
    pub rule_app_limit: Option<u32>,
    /// Candidate clause indices for the first goal literal, replacing the
    /// predicate's full clause list.
    pub first_candidates: Option<Vec<usize>>,
}

impl SolveConfig {
    pub fn plain() -> Self {
        SolveConfig { mode: Some(Mode::Plain), ..Default::default() }
    }

    pub fn depth(max: u32) -> Self {
        SolveConfig { mode: Some(Mode::DepthBounded { max }), ..Default::default() }
    }

    pub fn specialized() -> Self {
        SolveConfig { mode: Some(Mode::Specialized { aux_depth: None }), ..Default::default() }
    }

    pub fn with_step_limit(mut self, n: u64) -> Self {
        self.step_limit = Some(n);
        self
    }

    pub fn with_rule_app_limit(mut self, n: u32) -> Self {
        self.rule_app_limit = Some(n);
        self
    }

    fn mode(&self) -> Mode {
        self.mode.unwrap_or(Mode::Plain)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("step limit of {0} unification attempts exceeded")]
    StepLimit(u64),
    #[error("indirect recursion requires tabling (unsupported): {0}")]
    IndirectRecursion(String),
    #[error("clause {clause} of {pred} is not of covariation shape: {reason}")]
    Shape { clause: ClauseId, pred: String, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    /// The goal graph under the accumulated bindings; roots are the goal arguments.
    pub fs: FeatureStructure,
    /// The depth bound cut resolution short somewhere on this branch.
    pub partial: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Clauses whose head unified with the selected literal.
    pub clause_tries: u64,
    /// Head unifications attempted, successful or not.
    pub unification_attempts: u64,
    pub choice_points: u64,
    pub solutions: u64,
    /// `clause_tries` broken down by clause index.
    pub tries_by_clause: Vec<u64>,
}

impl SolveStats {
    pub fn tries_for(&self, program: &Program, id: ClauseId) -> u64 {
        program
            .clause_index(id)
            .and_then(|i| self.tries_by_clause.get(i).copied())
            .unwrap_or(0)
    }

    /// Add another session's counters.
    pub fn absorb(&mut self, other: &SolveStats) {
        self.clause_tries += other.clause_tries;
        self.unification_attempts += other.unification_attempts;
        self.choice_points += other.choice_points;
        self.solutions += other.solutions;
        if self.tries_by_clause.len() < other.tries_by_clause.len() {
            self.tries_by_clause.resize(other.tries_by_clause.len(), 0);
        }
        for (a, b) in self.tries_by_clause.iter_mut().zip(&other.tries_by_clause) {
            *a += b;
        }
    }
}

/// Head predicate is an interaction predicate and some body literal calls it again.
pub fn recursive_interaction_clause(program: &Program, clause: &Clause) -> bool {
    program.is_interaction(clause.head.pred) && clause.body.iter().any(|l| l.pred == clause.head.pred)
}

/// Drop the lexical-rule call from a recursive interaction clause, keeping
/// the recursive call and every sharing in the graph.
pub fn make_body_more_general(program: &Program, clause: &Clause) -> Result<Clause, SolveError> {
    let shape = |reason: &str| SolveError::Shape {
        clause: clause.id,
        pred: program.pred(clause.head.pred).to_string(),
        reason: reason.to_string(),
    };
    if clause.body.len() != 2 {
        return Err(shape("expected exactly one rule call and one interaction call"));
    }
    let rule_calls: Vec<usize> = (0..2).filter(|&i| !program.is_interaction(clause.body[i].pred)).collect();
    if rule_calls.len() != 1 {
        return Err(shape("expected exactly one rule call"));
    }
    Ok(clause.without_body_literal(rule_calls[0]))
}

/// A copy of `clause` whose graph was rebuilt node by node.
pub fn rename_clause(program: &Program, clause: &Clause) -> Clause {
    let mut store = Store::new(program.sig());
    let roots = store.load(&clause.graph);
    clause.with_graph(store.extract(&roots))
}

/// Refuse interaction predicates that reach themselves through another one.
pub fn check_interaction_recursion(program: &Program) -> Result<(), SolveError> {
    let inter: Vec<PredId> = program.preds().filter(|(_, p)| p.interaction).map(|(id, _)| id).collect();
    let succ = |p: PredId| -> Vec<PredId> {
        let mut out: Vec<PredId> = program
            .clauses_of(p)
            .iter()
            .flat_map(|&i| program.clause(i).body.iter().map(|l| l.pred))
            .filter(|&q| q != p && program.is_interaction(q))
            .collect();
        out.sort();
        out.dedup();
        out
    };
    for &p in &inter {
        let mut seen = HashSet::new();
        let mut stack = succ(p);
        while let Some(q) = stack.pop() {
            if q == p {
                return Err(SolveError::IndirectRecursion(program.pred(p).to_string()));
            }
            if seen.insert(q) {
                stack.extend(succ(q));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
struct Item {
    pred: PredId,
    args: SmallVec<[u32; 3]>,
    depth: u32,
    rule_apps: u32,
    exclude: Option<ClauseId>,
    restricted: bool,
}

struct Frame {
    item: Item,
    next: Cont,
}

type Cont = Option<Rc<Frame>>;

struct ChoicePoint {
    item: Item,
    rest: Cont,
    mark: Mark,
    next_candidate: usize,
    partial: bool,
}

/// Per-clause data computed once per session.
enum Prepared {
    Normal,
    /// Recursive interaction clause with its rule call removed.
    Generalized(Clause),
}

pub struct Solver<'p> {
    program: &'p Program,
    config: SolveConfig,
    mode: Mode,
    store: Store<'p>,
    goal_roots: Vec<u32>,
    cont: Cont,
    partial: bool,
    choices: Vec<ChoicePoint>,
    prepared: Vec<Prepared>,
    started: bool,
    done: bool,
    stats: SolveStats,
}

impl<'p> Solver<'p> {
    pub fn new(program: &'p Program, goal: &Goal, config: SolveConfig) -> Result<Solver<'p>, SolveError> {
        let mode = config.mode();
        let mut prepared = Vec::with_capacity(program.clauses().len());
        if let Mode::Specialized { .. } = mode {
            check_interaction_recursion(program)?;
            for c in program.clauses() {
                prepared.push(if recursive_interaction_clause(program, c) {
                    Prepared::Generalized(make_body_more_general(program, c)?)
                } else {
                    Prepared::Normal
                });
            }
        }
        let mut store = Store::new(program.sig()).deferring_cycles();
        let off = store.load_nodes(goal.fs.nodes());
        let goal_roots: Vec<u32> = goal.fs.roots().iter().map(|r| r.0 + off).collect();
        let mut cont: Cont = None;
        for (i, lit) in goal.literals.iter().enumerate().rev() {
            let item = Item {
                pred: lit.pred,
                args: lit.args.iter().map(|a| a.0 + off).collect(),
                depth: 0,
                rule_apps: 0,
                exclude: None,
                restricted: i == 0 && config.first_candidates.is_some(),
            };
            cont = Some(Rc::new(Frame { item, next: cont }));
        }
        let stats = SolveStats { tries_by_clause: vec![0; program.clauses().len()], ..Default::default() };
        Ok(Solver {
            program,
            config,
            mode,
            store,
            goal_roots,
            cont,
            partial: false,
            choices: Vec::new(),
            prepared,
            started: false,
            done: false,
            stats,
        })
    }

    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    pub fn into_stats(self) -> SolveStats {
        self.stats
    }

    fn cut_off(&self, item: &Item) -> bool {
        match self.mode {
            Mode::Plain => false,
            Mode::DepthBounded { max } => item.depth >= max,
            Mode::Specialized { aux_depth: Some(max) } => {
                !self.program.is_interaction(item.pred) && item.depth >= max
            }
            Mode::Specialized { aux_depth: None } => false,
        }
    }

    fn candidates(&self, item: &Item) -> &[usize] {
        if item.restricted {
            self.config.first_candidates.as_deref().unwrap_or(&[])
        } else {
            self.program.clauses_of(item.pred)
        }
    }

    /// Try candidates from `start`; on success the goal list is extended and
    /// a choice point is left for the remaining candidates.
    fn resolve(&mut self, item: Item, rest: Cont, start: usize) -> Result<bool, SolveError> {
        let program = self.program;
        let n = self.candidates(&item).len();
        for k in start..n {
            let ci = self.candidates(&item)[k];
            let clause = program.clause(ci);
            if item.exclude == Some(clause.id) {
                continue;
            }
            let applies_rule = program.is_interaction(clause.head.pred) && !clause.body.is_empty();
            let rule_apps = item.rule_apps + applies_rule as u32;
            if let Some(limit) = self.config.rule_app_limit {
                if rule_apps > limit {
                    continue;
                }
            }
            self.stats.unification_attempts += 1;
            if let Some(limit) = self.config.step_limit {
                if self.stats.unification_attempts > limit {
                    return Err(SolveError::StepLimit(limit));
                }
            }
            // Cheap root type check before copying the clause in.
            let sig = program.sig();
            let clash = item
                .args
                .iter()
                .zip(&clause.head.args)
                .any(|(&g, &h)| sig.meet(self.store.ty(g), clause.graph.ty(h)).is_none());
            if clash {
                continue;
            }
            let (used, generalized) = match self.prepared.get(ci) {
                Some(Prepared::Generalized(c)) => (c, true),
                _ => (clause, false),
            };
            let mark = self.store.mark();
            let off = self.store.load_nodes(used.graph.nodes());
            let pairs = item.args.iter().zip(&used.head.args).map(|(&g, h)| (g, h.0 + off));
            let pairs: SmallVec<[(u32, u32); 3]> = pairs.collect();
            if self.store.unify_all(pairs).is_err() {
                self.store.undo(mark);
                continue;
            }
            self.stats.clause_tries += 1;
            self.stats.tries_by_clause[ci] += 1;
            if k + 1 < n {
                self.stats.choice_points += 1;
                self.choices.push(ChoicePoint {
                    item: item.clone(),
                    rest: rest.clone(),
                    mark,
                    next_candidate: k + 1,
                    partial: self.partial,
                });
            }
            let mut cont = rest;
            for lit in used.body.iter().rev() {
                let exclude = (generalized && lit.pred == clause.head.pred).then_some(clause.id);
                let body_item = Item {
                    pred: lit.pred,
                    args: lit.args.iter().map(|a| a.0 + off).collect(),
                    depth: item.depth + 1,
                    rule_apps,
                    exclude,
                    restricted: false,
                };
                cont = Some(Rc::new(Frame { item: body_item, next: cont }));
            }
            self.cont = cont;
            return Ok(true);
        }
        Ok(false)
    }

    fn backtrack(&mut self) -> Result<bool, SolveError> {
        while let Some(cp) = self.choices.pop() {
            self.store.undo(cp.mark);
            self.partial = cp.partial;
            if self.resolve(cp.item, cp.rest, cp.next_candidate)? {
                return Ok(true);
            }
        }
        self.done = true;
        Ok(false)
    }

    /// The next solution, or `None` when the search space is exhausted.
    pub fn next_solution(&mut self) -> Result<Option<Solution>, SolveError> {
        if self.done {
            return Ok(None);
        }
        if self.started {
            if !self.backtrack()? {
                return Ok(None);
            }
        } else {
            self.started = true;
        }
        loop {
            let Some(frame) = self.cont.clone() else {
                // A cyclic binding anywhere in the derivation is a failure.
                if !self.store.is_acyclic() {
                    if !self.backtrack()? {
                        return Ok(None);
                    }
                    continue;
                }
                self.stats.solutions += 1;
                let fs = self.store.extract(&self.goal_roots);
                return Ok(Some(Solution { fs, partial: self.partial }));
            };
            let item = frame.item.clone();
            let rest = frame.next.clone();
            if self.cut_off(&item) {
                self.partial = true;
                self.cont = rest;
                continue;
            }
            if !self.resolve(item, rest, 0)? && !self.backtrack()? {
                return Ok(None);
            }
        }
    }
}

impl Iterator for Solver<'_> {
    type Item = Result<Solution, SolveError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_solution().transpose()
    }
}

/// Enumerate up to `max_solutions` (all when `None`).
pub fn solve_all(
    program: &Program,
    goal: &Goal,
    config: SolveConfig,
    max_solutions: Option<usize>,
) -> Result<(Vec<Solution>, SolveStats), SolveError> {
    let mut solver = Solver::new(program, goal, config)?;
    let mut out = Vec::new();
    while max_solutions.map_or(true, |m| out.len() < m) {
        match solver.next_solution()? {
            Some(s) => out.push(s),
            None => break,
        }
    }
    Ok((out, solver.into_stats()))
}

pub fn solve(program: &Program, goal: &Goal) -> Result<(Vec<Solution>, SolveStats), SolveError> {
    solve_all(program, goal, SolveConfig::plain(), None)
}

pub fn solve_depth_bounded(
    program: &Program,
    goal: &Goal,
    max: u32,
) -> Result<(Vec<Solution>, SolveStats), SolveError> {
    solve_all(program, goal, SolveConfig::depth(max), None)
}

pub fn solve_specialized(program: &Program, goal: &Goal) -> Result<(Vec<Solution>, SolveStats), SolveError> {
    solve_all(program, goal, SolveConfig::specialized(), None)
}
