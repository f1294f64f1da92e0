//! Off-line constraint propagation: a body goal is replaced by its
//! unification with the most specific generalization of all its solutions.

use std::fmt;

use thiserror::Error;

use crate::fs::FeatureStructure;
use crate::ops::{equivalent, msg_all};
use crate::program::{Clause, ClauseId, Goal, Program};
use crate::solve::{solve_all, Mode, SolveConfig, SolveError};
use crate::store::Store;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpreter {
    /// Exact enumeration; only for programs known to terminate.
    Plain,
    DepthBounded(u32),
    Specialized { aux_depth: Option<u32> },
}

impl Interpreter {
    fn mode(self) -> Mode {
        match self {
            Interpreter::Plain => Mode::Plain,
            Interpreter::DepthBounded(max) => Mode::DepthBounded { max },
            Interpreter::Specialized { aux_depth } => Mode::Specialized { aux_depth },
        }
    }
}

impl fmt::Display for Interpreter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interpreter::Plain => write!(f, "plain"),
            Interpreter::DepthBounded(n) => write!(f, "depth:{n}"),
            Interpreter::Specialized { aux_depth: None } => write!(f, "specialized"),
            Interpreter::Specialized { aux_depth: Some(n) } => write!(f, "specialized:{n}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OnEmpty {
    /// Remove the clause hosting an unsatisfiable goal.
    #[default]
    DeleteClause,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    pub interpreter: Interpreter,
    pub on_empty: OnEmpty,
    /// Fuse for each goal's enumeration.
    pub step_limit: Option<u64>,
}

impl Strategy {
    pub fn new(interpreter: Interpreter) -> Strategy {
        Strategy { interpreter, on_empty: OnEmpty::DeleteClause, step_limit: None }
    }
}

/// A body goal: clause identity plus 0-based body position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Target {
    pub clause: ClauseId,
    pub body_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommonFactor {
    pub fs: FeatureStructure,
    pub solution_count: usize,
    pub any_partial: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetReport {
    pub target: Target,
    pub pred: String,
    pub original: FeatureStructure,
    pub factor: Option<FeatureStructure>,
    pub changed: bool,
    pub deleted: bool,
    pub solution_count: usize,
    pub any_partial: bool,
}

impl fmt::Display for TargetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "clause {} goal {} ({}): {} solution(s){}, {}",
            self.target.clause,
            self.target.body_index,
            self.pred,
            self.solution_count,
            if self.any_partial { " incl. partial" } else { "" },
            if self.deleted {
                "clause deleted"
            } else if self.changed {
                "goal made more specific"
            } else {
                "no change"
            }
        )
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum PropagateError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(
        "the program may not terminate under the plain interpreter; use the specialized or a depth-bounded interpreter"
    )]
    Nonterminating,
    #[error("goal {body_index} of clause {clause} has no solutions")]
    Empty { clause: ClauseId, body_index: usize },
    #[error("no goal {body_index} in clause {clause}")]
    BadTarget { clause: ClauseId, body_index: usize },
    #[error("internal error: goal {body_index} of clause {clause} does not unify with its own common factor")]
    Inconsistent { clause: ClauseId, body_index: usize },
}

/// Enumerate all solutions of `goal` and fold them with MSG. `None` when
/// there are no solutions.
pub fn generalized_solutions_for_goal(
    program: &Program,
    goal: &Goal,
    strategy: &Strategy,
) -> Result<Option<CommonFactor>, PropagateError> {
    if strategy.interpreter == Interpreter::Plain && program.meta.nonterminating {
        return Err(PropagateError::Nonterminating);
    }
    let config = SolveConfig {
        mode: Some(strategy.interpreter.mode()),
        step_limit: strategy.step_limit,
        ..Default::default()
    };
    let (solutions, _) = solve_all(program, goal, config, None)?;
    let any_partial = solutions.iter().any(|s| s.partial);
    Ok(msg_all(program.sig(), solutions.iter().map(|s| &s.fs)).map(|fs| CommonFactor {
        fs,
        solution_count: solutions.len(),
        any_partial,
    }))
}

enum Action {
    Keep,
    Delete,
    Replace(Clause),
}

fn apply(program: &mut Program, target: Target, action: Action) {
    match action {
        Action::Keep => {}
        Action::Delete => {
            program.remove_clause(target.clause);
        }
        Action::Replace(c) => program.replace_clause(c),
    }
}

/// Rewrite one body goal with its common factor.
pub fn propagate_goal(
    program: &Program,
    target: Target,
    strategy: &Strategy,
) -> Result<(Program, TargetReport), PropagateError> {
    let (action, report) = plan(program, target, strategy)?;
    let mut out = program.clone();
    apply(&mut out, target, action);
    Ok((out, report))
}

fn plan(program: &Program, target: Target, strategy: &Strategy) -> Result<(Action, TargetReport), PropagateError> {
    let bad = PropagateError::BadTarget { clause: target.clause, body_index: target.body_index };
    let clause = program.clause_by_id(target.clause).ok_or(bad.clone())?;
    let lit = clause.body.get(target.body_index).ok_or(bad)?;
    let original = clause.body_goal_fs(target.body_index);
    let goal = Goal::single(lit.pred, original.clone());
    let mut report = TargetReport {
        target,
        pred: program.pred(lit.pred).to_string(),
        original: original.clone(),
        factor: None,
        changed: false,
        deleted: false,
        solution_count: 0,
        any_partial: false,
    };
    let Some(factor) = generalized_solutions_for_goal(program, &goal, strategy)? else {
        return match strategy.on_empty {
            OnEmpty::Error => {
                Err(PropagateError::Empty { clause: target.clause, body_index: target.body_index })
            }
            OnEmpty::DeleteClause => {
                report.deleted = true;
                report.changed = true;
                Ok((Action::Delete, report))
            }
        };
    };
    report.solution_count = factor.solution_count;
    report.any_partial = factor.any_partial;

    let sig = program.sig();
    let mut store = Store::new(sig);
    let off = store.load_nodes(clause.graph.nodes());
    let roots: Vec<u32> = clause.graph.roots().iter().map(|r| r.0 + off).collect();
    let froots = store.load(&factor.fs);
    let goal_nodes: Vec<u32> = lit.args.iter().map(|a| a.0 + off).collect();
    store
        .unify_all(goal_nodes.iter().copied().zip(froots.iter().copied()))
        .map_err(|_| PropagateError::Inconsistent { clause: target.clause, body_index: target.body_index })?;
    let rewritten = clause.with_graph(store.extract(&roots));
    let new_goal = rewritten.body_goal_fs(target.body_index);
    report.changed = !equivalent(sig, &new_goal, &original);
    report.factor = Some(factor.fs);
    let action = if report.changed { Action::Replace(rewritten) } else { Action::Keep };
    Ok((action, report))
}

/// Which goals to propagate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Targets {
    /// Every body goal, clauses in source order, goals left to right.
    All,
    /// Body goals of the extended lexical entries.
    Entries,
    List(Vec<Target>),
}

pub fn resolve_targets(program: &Program, targets: &Targets) -> Vec<Target> {
    match targets {
        Targets::List(v) => v.clone(),
        Targets::All => program
            .clauses()
            .iter()
            .flat_map(|c| (0..c.body.len()).map(move |i| Target { clause: c.id, body_index: i }))
            .collect(),
        Targets::Entries => match program.meta.entry_pred {
            None => Vec::new(),
            Some(p) => program
                .clauses_of(p)
                .iter()
                .map(|&i| program.clause(i))
                .flat_map(|c| (0..c.body.len()).map(move |i| Target { clause: c.id, body_index: i }))
                .collect(),
        },
    }
}

/// Apply [`propagate_goal`] to each target in order. Targets in clauses
/// deleted along the way are skipped.
pub fn propagate_program(
    program: &Program,
    targets: &Targets,
    strategy: &Strategy,
) -> Result<(Program, Vec<TargetReport>), PropagateError> {
    let mut current = program.clone();
    let mut reports = Vec::new();
    for t in resolve_targets(program, targets) {
        if current.clause_by_id(t.clause).is_none() {
            continue;
        }
        let (action, report) = plan(&current, t, strategy)?;
        apply(&mut current, t, action);
        reports.push(report);
    }
    Ok((current, reports))
}
