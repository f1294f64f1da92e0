//! Phonology-indexed lexical lookup.
//!
//! Every extended entry is copied once per reachable PHON value, with PHON
//! pre-bound in the copy's head. A lookup solves only the copies filed
//! under the word, plus entries whose phonology could not be enumerated.

use std::collections::HashMap;

use thiserror::Error;

use crate::fs::FeatureStructure;
use crate::program::{ClauseId, Goal, Program};
use crate::signature::{Signature, TOP};
use crate::solve::{Solution, SolveConfig, SolveError, SolveStats, Solver};
use crate::source::word_list;
use crate::store::Store;

pub const INDEX_PRED: &str = "indexed_lex";

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("the program has no lexicon predicate")]
    NoLexicon,
    #[error("the signature lacks PHON or list types")]
    NoPhonology,
    #[error("predicate {INDEX_PRED}/1 already exists")]
    NameClash,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Why an entry went to the fallback list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unindexed {
    pub entry: ClauseId,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct IndexedLexicon {
    /// The optimized program plus the `indexed_lex/1` clauses.
    pub program: Program,
    pub buckets: HashMap<Vec<String>, Vec<ClauseId>>,
    /// Copies of entries with unknown phonology, tried on every lookup.
    pub fallback: Vec<ClauseId>,
    pub unindexed: Vec<Unindexed>,
}

struct Phon {
    phon: crate::signature::FeatId,
    first: crate::signature::FeatId,
    rest: crate::signature::FeatId,
    e_list: crate::signature::TypeId,
}

impl Phon {
    fn new(sig: &Signature) -> Option<Phon> {
        Some(Phon {
            phon: sig.feature_id("PHON")?,
            first: sig.feature_id("FIRST")?,
            rest: sig.feature_id("REST")?,
            e_list: sig.type_id("e_list")?,
        })
    }

    /// The atom sequence under PHON, if fully instantiated.
    fn key(&self, sig: &Signature, fs: &FeatureStructure) -> Result<Vec<String>, String> {
        let mut cur = fs.arc(fs.root(), self.phon).ok_or("no PHON value")?;
        let mut out = Vec::new();
        loop {
            if fs.ty(cur) == self.e_list {
                return Ok(out);
            }
            let (Some(hd), Some(tl)) = (fs.arc(cur, self.first), fs.arc(cur, self.rest)) else {
                return Err("PHON is not a closed list".into());
            };
            if !sig.is_atom(fs.ty(hd)) {
                return Err(format!("PHON element {} is not an atom", out.len() + 1));
            }
            out.push(sig.type_name(fs.ty(hd)).to_string());
            cur = tl;
            if out.len() > 64 {
                return Err("PHON too long".into());
            }
        }
    }
}

/// Enumerate each entry's reachable PHON values with `config` (normally
/// the specialized interpreter) and file one pre-bound copy per value.
pub fn split_entries(program: &Program, config: &SolveConfig) -> Result<IndexedLexicon, IndexError> {
    let lex = program.meta.entry_pred.ok_or(IndexError::NoLexicon)?;
    let sig = program.sig_arc().clone();
    let ph = Phon::new(&sig).ok_or(IndexError::NoPhonology)?;
    if program.pred_id(INDEX_PRED, 1).is_some() {
        return Err(IndexError::NameClash);
    }
    let mut out = program.clone();
    let idx = out.intern_pred(INDEX_PRED, 1);
    let probe = Goal::single(lex, FeatureStructure::top());
    let mut buckets: HashMap<Vec<String>, Vec<ClauseId>> = HashMap::new();
    let mut fallback = Vec::new();
    let mut unindexed = Vec::new();

    for &ci in program.clauses_of(lex) {
        let clause = program.clause(ci);
        let cfg = SolveConfig { first_candidates: Some(vec![ci]), ..config.clone() };
        let mut keys: Vec<Vec<String>> = Vec::new();
        let mut failure = None;
        for sol in Solver::new(program, &probe, cfg)? {
            let sol = sol?;
            match ph.key(&sig, &sol.fs) {
                Ok(k) if !sol.partial => {
                    if !keys.contains(&k) {
                        keys.push(k);
                    }
                }
                Ok(_) => failure = Some("partial solution".to_string()),
                Err(e) => failure = Some(e),
            }
            if failure.is_some() {
                break;
            }
        }
        let body: Vec<_> = clause.body.iter().map(|l| l.pred).collect();
        if let Some(reason) = failure {
            let id = out.add_clause(idx, &body, clause.graph.clone());
            fallback.push(id);
            unindexed.push(Unindexed { entry: clause.id, reason });
            continue;
        }
        for k in keys {
            let words: Vec<&str> = k.iter().map(String::as_str).collect();
            let Some(graph) = bind_phon(&sig, &ph, &clause.graph, clause.head.args[0].0, &words) else {
                continue;
            };
            let id = out.add_clause(idx, &body, graph);
            buckets.entry(k).or_default().push(id);
        }
    }
    Ok(IndexedLexicon { program: out, buckets, fallback, unindexed })
}

fn bind_phon(sig: &Signature, ph: &Phon, graph: &FeatureStructure, head: u32, words: &[&str]) -> Option<FeatureStructure> {
    let list = word_list(sig, words)?;
    let mut store = Store::new(sig);
    let off = store.load_nodes(graph.nodes());
    let roots: Vec<u32> = graph.roots().iter().map(|r| r.0 + off).collect();
    let at = store.ensure_arc(head + off, ph.phon).ok()?;
    let l = store.load(&list)[0];
    store.unify(at, l).ok()?;
    Some(store.extract(&roots))
}

impl IndexedLexicon {
    /// Rebuild from parts, e.g. after deserialization.
    pub fn from_parts(program: Program, buckets: HashMap<Vec<String>, Vec<ClauseId>>, fallback: Vec<ClauseId>) -> Self {
        IndexedLexicon { program, buckets, fallback, unindexed: Vec::new() }
    }

    pub fn index_pred(&self) -> crate::program::PredId {
        self.program.pred_id(INDEX_PRED, 1).expect("index predicate")
    }

    /// Candidate clause indices for a word: its bucket, then the fallback list.
    pub fn candidates(&self, words: &[&str]) -> Vec<usize> {
        let key: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        let bucket = self.buckets.get(&key).map(Vec::as_slice).unwrap_or(&[]);
        bucket
            .iter()
            .chain(&self.fallback)
            .filter_map(|&id| self.program.clause_index(id))
            .collect()
    }

    /// Lazy lookup; `None` when a word is not a known atom.
    pub fn lookup_iter<'a>(&'a self, words: &[&str], config: &SolveConfig) -> Result<Option<Solver<'a>>, IndexError> {
        let sig = self.program.sig();
        let Some(list) = word_list(sig, words) else {
            return Ok(None);
        };
        let phon = sig.feature_id("PHON").ok_or(IndexError::NoPhonology)?;
        let mut store = Store::new(sig);
        let x = store.fresh(TOP);
        let at = store.ensure_arc(x, phon).map_err(|_| IndexError::NoPhonology)?;
        let l = store.load(&list)[0];
        if store.unify(at, l).is_err() {
            return Ok(None);
        }
        let goal = Goal::single(self.index_pred(), store.extract(&[x]));
        let cfg = SolveConfig { first_candidates: Some(self.candidates(words)), ..config.clone() };
        Ok(Some(Solver::new(&self.program, &goal, cfg)?))
    }

    pub fn lookup(&self, words: &[&str], config: &SolveConfig) -> Result<(Vec<Solution>, SolveStats), IndexError> {
        let Some(mut solver) = self.lookup_iter(words, config)? else {
            return Ok((Vec::new(), SolveStats::default()));
        };
        let mut out = Vec::new();
        while let Some(s) = solver.next_solution()? {
            out.push(s);
        }
        Ok((out, solver.into_stats()))
    }

    /// Keys in sorted order.
    pub fn keys(&self) -> Vec<&Vec<String>> {
        let mut k: Vec<_> = self.buckets.keys().collect();
        k.sort();
        k
    }
}
