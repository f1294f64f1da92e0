//! Lexical rules compiled into definite clauses: interaction predicates
//! encode which rules may apply in which order, extended entries call them.
//!
//! Also provides the fully expanded variant, where rule closure is computed
//! up to a bound and stored as plain unit entries.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::fs::{FeatureStructure, NodeId, Path};
use crate::ops::unify;
use crate::program::{Goal, PredId, Program};
use crate::signature::{FeatId, Signature, TypeId, TOP};
use crate::solve::{solve_all, SolveConfig, SolveError};
use crate::store::Store;
use crate::syntax::{Grammar, RawClause};

pub const ENTRY_PRED: &str = "lex";
const MAX_RULES: usize = 64;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("lexical rule {rule} calls undefined predicate {pred}")]
    UndefinedAttachment { rule: String, pred: String },
    #[error("lexical rule name {0} clashes with a grammar predicate of arity 2")]
    NameClash(String),
    #[error("duplicate lexical rule {0}")]
    DuplicateRule(String),
    #[error("at most {MAX_RULES} lexical rules are supported")]
    TooManyRules,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexicalRule {
    pub name: String,
    /// Roots: input, output, then the attachment arguments.
    pub graph: FeatureStructure,
    pub attachments: Vec<(String, usize)>,
}

impl LexicalRule {
    pub fn from_raw(raw: &RawClause) -> LexicalRule {
        LexicalRule {
            name: raw.head.name.clone(),
            graph: raw.graph.clone(),
            attachments: raw.body.iter().map(|l| (l.name.clone(), l.args.len())).collect(),
        }
    }

    pub fn input(&self) -> NodeId {
        self.graph.roots()[0]
    }

    pub fn output(&self) -> NodeId {
        self.graph.roots()[1]
    }

    pub fn in_spec(&self) -> FeatureStructure {
        self.graph.project(self.input())
    }

    pub fn out_spec(&self) -> FeatureStructure {
        self.graph.project(self.output())
    }
}

/// Paths whose values a rule copies unchanged from input to output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub rule: String,
    pub paths: Vec<Vec<FeatId>>,
}

impl Frame {
    pub fn named_paths(&self, sig: &Signature) -> Vec<Path> {
        self.paths
            .iter()
            .map(|p| Path(p.iter().map(|&f| sig.feature_name(f).to_string()).collect()))
            .collect()
    }
}

/// Maximal paths left unmentioned on the output side and appropriate on
/// both sides. A path the input constrains but the output leaves open is
/// still transferred.
pub fn compute_frame(rule: &LexicalRule, sig: &Signature) -> Frame {
    let g = &rule.graph;
    let deg = g.in_degrees();
    let mut paths = Vec::new();
    let mut prefix = Vec::new();
    frame_below(
        sig,
        g,
        &deg,
        Some(rule.input()),
        g.ty(rule.input()),
        rule.output(),
        &mut prefix,
        &mut paths,
    );
    Frame { rule: rule.name.clone(), paths }
}

#[allow(clippy::too_many_arguments)]
fn frame_below(
    sig: &Signature,
    g: &FeatureStructure,
    deg: &[u32],
    in_node: Option<NodeId>,
    in_ty: TypeId,
    out_node: NodeId,
    prefix: &mut Vec<FeatId>,
    paths: &mut Vec<Vec<FeatId>>,
) {
    let out_ty = g.ty(out_node);
    for &(f, restr_out) in sig.appropriate(out_ty) {
        let Some(restr_in) = sig.approp(in_ty, f) else {
            continue;
        };
        prefix.push(f);
        match g.arc(out_node, f) {
            None => paths.push(prefix.clone()),
            Some(c) => {
                let node = g.node(c);
                if deg[c.index()] > 1 {
                    // a sharing specifies the whole value
                } else if node.arcs.is_empty() {
                    if node.ty == restr_out {
                        paths.push(prefix.clone());
                    }
                } else {
                    let ic = in_node.and_then(|i| g.arc(i, f));
                    let ic_ty = ic.map(|n| g.ty(n)).unwrap_or(restr_in);
                    frame_below(sig, g, deg, ic, ic_ty, c, prefix, paths);
                }
            }
        }
        prefix.pop();
    }
}

/// States are sets of rules still permitted; state 0 permits every rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton {
    /// Permitted-rule bitmask per state.
    pub states: Vec<u64>,
    pub transitions: BTreeMap<(usize, usize), usize>,
}

impl Automaton {
    pub fn permits(&self, state: usize, rule: usize) -> bool {
        self.states[state] & (1 << rule) != 0
    }

    pub fn next(&self, state: usize, rule: usize) -> Option<usize> {
        self.transitions.get(&(state, rule)).copied()
    }

    /// Some state can reach itself, so rule application is unbounded.
    pub fn has_cycle(&self) -> bool {
        let n = self.states.len();
        let succ = |s: usize| self.transitions.range((s, 0)..(s + 1, 0)).map(|(_, &t)| t);
        (0..n).any(|start| {
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = succ(start).collect();
            while let Some(s) = stack.pop() {
                if s == start {
                    return true;
                }
                if !seen[s] {
                    seen[s] = true;
                    stack.extend(succ(s));
                }
            }
            false
        })
    }
}

/// A rule's output after the frame has copied the input's values over.
fn framed_output(rule: &LexicalRule, frame: &Frame, sig: &Signature) -> Option<FeatureStructure> {
    let mut store = Store::new(sig);
    let roots = store.load(&rule.graph);
    for p in &frame.paths {
        let a = store.ensure_path(roots[0], p).ok()?;
        let b = store.ensure_path(roots[1], p).ok()?;
        store.unify(a, b).ok()?;
    }
    Some(store.extract(&roots[1..2]))
}

pub fn build_automaton(rules: &[LexicalRule], frames: &[Frame], sig: &Signature) -> Automaton {
    let n = rules.len();
    let all: u64 = if n == 0 { 0 } else { u64::MAX >> (64 - n) };
    let succ: Vec<u64> = rules
        .iter()
        .zip(frames)
        .map(|(r, fr)| match framed_output(r, fr, sig) {
            None => 0,
            Some(out) => rules
                .iter()
                .enumerate()
                .filter(|(_, r2)| unify(sig, &out, &r2.in_spec()).is_ok())
                .fold(0u64, |m, (j, _)| m | (1 << j)),
        })
        .collect();
    let mut states = vec![all];
    let mut index: BTreeMap<u64, usize> = BTreeMap::from([(all, 0)]);
    let mut transitions = BTreeMap::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        for r in 0..n {
            if states[s] & (1 << r) == 0 {
                continue;
            }
            let target = *index.entry(succ[r]).or_insert_with(|| {
                states.push(succ[r]);
                queue.push_back(states.len() - 1);
                states.len() - 1
            });
            transitions.insert((s, r), target);
        }
    }
    Automaton { states, transitions }
}

pub fn interaction_name(state: usize) -> String {
    format!("interaction_{state}")
}

/// Lexical rules, frames and automaton for a grammar.
pub struct RuleSet {
    pub rules: Vec<LexicalRule>,
    pub frames: Vec<Frame>,
    pub automaton: Automaton,
}

impl RuleSet {
    pub fn new(grammar: &Grammar, sig: &Signature) -> Result<RuleSet, CompileError> {
        if grammar.rules.len() > MAX_RULES {
            return Err(CompileError::TooManyRules);
        }
        let rules: Vec<LexicalRule> = grammar.rules.iter().map(LexicalRule::from_raw).collect();
        let mut seen = HashSet::new();
        for r in &rules {
            if !seen.insert(r.name.as_str()) {
                return Err(CompileError::DuplicateRule(r.name.clone()));
            }
        }
        let frames: Vec<Frame> = rules.iter().map(|r| compute_frame(r, sig)).collect();
        let automaton = build_automaton(&rules, &frames, sig);
        Ok(RuleSet { rules, frames, automaton })
    }
}

/// Grammar clauses plus one `NAME(IN, OUT) :- attachments.` clause per rule.
fn base_program(sig: Arc<Signature>, grammar: &Grammar, rules: &RuleSet) -> Result<(Program, Vec<PredId>), CompileError> {
    let mut program = Program::new(sig);
    for c in &grammar.clauses {
        program.add_raw_clause(c);
    }
    let mut rule_preds = Vec::new();
    for (raw, rule) in grammar.rules.iter().zip(&rules.rules) {
        if program.pred_id(&rule.name, 2).is_some() {
            return Err(CompileError::NameClash(rule.name.clone()));
        }
        for (name, arity) in &rule.attachments {
            let defined = program.pred_id(name, *arity).is_some_and(|p| !program.clauses_of(p).is_empty());
            if !defined {
                return Err(CompileError::UndefinedAttachment {
                    rule: rule.name.clone(),
                    pred: format!("{name}/{arity}"),
                });
            }
        }
        program.add_raw_clause(raw);
        rule_preds.push(program.pred_id(&rule.name, 2).expect("rule predicate"));
    }
    Ok((program, rule_preds))
}

/// The covariation encoding: interaction predicates per automaton state and
/// one `lex(OUT) :- interaction_0(ENTRY, OUT).` clause per base entry.
pub fn compile_lexicon(sig: Arc<Signature>, grammar: &Grammar) -> Result<Program, CompileError> {
    let rules = RuleSet::new(grammar, &sig)?;
    let (mut program, rule_preds) = base_program(sig.clone(), grammar, &rules)?;
    let auto = &rules.automaton;
    let inter: Vec<PredId> = (0..auto.states.len())
        .map(|s| {
            let p = program.intern_pred(&interaction_name(s), 2);
            program.set_interaction(p, true);
            p
        })
        .collect();
    for s in 0..auto.states.len() {
        for (r, frame) in rules.frames.iter().enumerate() {
            let Some(t) = auto.next(s, r) else {
                continue;
            };
            let mut store = Store::new(&sig);
            let (input, aux, out) = (store.fresh(TOP), store.fresh(TOP), store.fresh(TOP));
            for p in &frame.paths {
                let a = store.ensure_path(input, p).expect("frame path on fresh node");
                let b = store.ensure_path(aux, p).expect("frame path on fresh node");
                store.unify(a, b).expect("frame sharing on fresh nodes");
            }
            let graph = store.extract(&[input, out, input, aux, aux, out]);
            program.add_clause(inter[s], &[rule_preds[r], inter[t]], graph);
        }
        program.add_clause(inter[s], &[], FeatureStructure::tops(1).with_roots(vec![NodeId(0), NodeId(0)]));
    }
    let lex = program.intern_pred(ENTRY_PRED, 1);
    for e in &grammar.entries {
        let out = FeatureStructure::top();
        let t = FeatureStructure::tuple(&[&out, e, &out]);
        let r = t.roots().to_vec();
        // head OUT, body (ENTRY, OUT): roots out, entry, out
        let graph = t.with_roots(vec![r[0], r[1], r[0]]);
        program.add_clause(lex, &[inter[0]], graph);
    }
    program.meta.entry_pred = Some(lex);
    program.meta.rule_preds = rule_preds;
    program.meta.nonterminating = auto.has_cycle();
    Ok(program)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expansion {
    /// Base entries followed by derived ones, duplicates removed.
    pub entries: Vec<FeatureStructure>,
    /// Rules could still apply at the bound.
    pub truncated: bool,
}

/// Close the base entries under automaton-permitted rule sequences of
/// length at most `bound`.
pub fn expand_lexicon(sig: Arc<Signature>, grammar: &Grammar, bound: u32) -> Result<Expansion, CompileError> {
    let rules = RuleSet::new(grammar, &sig)?;
    let (program, rule_preds) = base_program(sig.clone(), grammar, &rules)?;
    let mut seen: HashSet<FeatureStructure> = HashSet::new();
    let mut expanded: HashSet<(FeatureStructure, usize, u32)> = HashSet::new();
    let mut entries = Vec::new();
    let mut truncated = false;
    for base in &grammar.entries {
        let mut queue: VecDeque<(FeatureStructure, usize, u32)> = VecDeque::from([(base.clone(), 0, 0)]);
        while let Some((e, state, apps)) = queue.pop_front() {
            let key = e.canonical(&sig);
            if seen.insert(key.clone()) {
                entries.push(e.clone());
            }
            if !expanded.insert((key, state, apps)) {
                continue;
            }
            for (r, frame) in rules.frames.iter().enumerate() {
                let Some(next) = rules.automaton.next(state, r) else {
                    continue;
                };
                let derived = apply_rule(&program, &sig, rule_preds[r], frame, &e)?;
                if derived.is_empty() {
                    continue;
                }
                if apps >= bound {
                    truncated = true;
                    continue;
                }
                for d in derived {
                    queue.push_back((d, next, apps + 1));
                }
            }
        }
    }
    Ok(Expansion { entries, truncated })
}

fn apply_rule(
    program: &Program,
    sig: &Signature,
    pred: PredId,
    frame: &Frame,
    entry: &FeatureStructure,
) -> Result<Vec<FeatureStructure>, CompileError> {
    let mut store = Store::new(sig);
    let input = store.load(entry)[0];
    let aux = store.fresh(TOP);
    for p in &frame.paths {
        let (Ok(a), Ok(b)) = (store.ensure_path(input, p), store.ensure_path(aux, p)) else {
            return Ok(Vec::new());
        };
        if store.unify(a, b).is_err() {
            return Ok(Vec::new());
        }
    }
    let goal = Goal::single(pred, store.extract(&[input, aux]));
    let (sols, _) = solve_all(program, &goal, SolveConfig::plain(), None)?;
    Ok(sols.iter().map(|s| s.fs.root_fs(1)).collect())
}

/// Grammar clauses plus `lex(E).` for every expanded entry.
pub fn compile_expanded(
    sig: Arc<Signature>,
    grammar: &Grammar,
    bound: u32,
) -> Result<(Program, Expansion), CompileError> {
    let expansion = expand_lexicon(sig.clone(), grammar, bound)?;
    let rules = RuleSet::new(grammar, &sig)?;
    let (mut program, rule_preds) = base_program(sig, grammar, &rules)?;
    let lex = program.intern_pred(ENTRY_PRED, 1);
    for e in &expansion.entries {
        program.add_clause(lex, &[], e.clone());
    }
    program.meta.entry_pred = Some(lex);
    program.meta.rule_preds = rule_preds;
    Ok((program, expansion))
}
