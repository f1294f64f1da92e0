//! Loading a signature plus grammar text, and building sentence goals.

use std::sync::Arc;

use thiserror::Error;

use crate::fs::FeatureStructure;
use crate::program::{Goal, Program};
use crate::signature::{Signature, TOP};
use crate::store::Store;
use crate::syntax::{collect_atoms, load_signature, parse_grammar, Diagnostic, Grammar};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("signature: {}", join(.0))]
    Signature(Vec<Diagnostic>),
    #[error("grammar: {}", join(.0))]
    Grammar(Vec<Diagnostic>),
    #[error("atoms: {0}")]
    Atoms(String),
}

fn join(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

impl LoadError {
    pub fn diagnostics(&self) -> Vec<String> {
        match self {
            LoadError::Signature(d) | LoadError::Grammar(d) => d.iter().map(|d| d.to_string()).collect(),
            LoadError::Atoms(s) => vec![s.clone()],
        }
    }
}

/// A validated signature (with every atom of `grammar` and `extra` texts)
/// and the parsed grammar.
pub fn load(sig_text: &str, grammar_text: &str, extra: &[&str]) -> Result<(Arc<Signature>, Grammar), LoadError> {
    let mut sig = load_signature(sig_text).map_err(LoadError::Signature)?;
    let mut atoms = collect_atoms(grammar_text).map_err(|d| LoadError::Grammar(vec![d]))?;
    for t in extra {
        atoms.extend(collect_atoms(t).map_err(|d| LoadError::Grammar(vec![d]))?);
    }
    sig.add_atoms(atoms).map_err(|e| LoadError::Atoms(e.to_string()))?;
    let grammar = parse_grammar(grammar_text, &sig).map_err(LoadError::Grammar)?;
    Ok((Arc::new(sig), grammar))
}

/// Grammar clauses only (no lexicon encoding).
pub fn plain_program(sig: Arc<Signature>, grammar: &Grammar) -> Program {
    let mut p = Program::new(sig);
    for c in &grammar.clauses {
        p.add_raw_clause(c);
    }
    p
}

/// A list of atoms. `None` if some word is not a known atom.
pub fn word_list(sig: &Signature, words: &[&str]) -> Option<FeatureStructure> {
    let (first, rest) = (sig.feature_id("FIRST")?, sig.feature_id("REST")?);
    let (ne, e) = (sig.type_id("ne_list")?, sig.type_id("e_list")?);
    let mut store = Store::new(sig);
    let mut tail = store.fresh(e);
    for w in words.iter().rev() {
        let cell = store.fresh(ne);
        let hd = store.fresh(sig.atom_id(w)?);
        let f = store.ensure_arc(cell, first).ok()?;
        let r = store.ensure_arc(cell, rest).ok()?;
        store.unify(f, hd).ok()?;
        store.unify(r, tail).ok()?;
        tail = cell;
    }
    Some(store.extract(&[tail]))
}

/// `pred(WORDS, _)` for a whitespace-separated sentence; `Err` names the
/// first unknown word. The predicate must be binary.
pub fn sentence_goal(program: &Program, pred: &str, sentence: &str) -> Result<Goal, String> {
    let words: Vec<&str> = sentence.split_whitespace().collect();
    let sig = program.sig();
    if let Some(w) = words.iter().find(|w| sig.atom_id(w).is_none()) {
        return Err(format!("unknown word {w:?}"));
    }
    let list = word_list(sig, &words).ok_or("signature has no list types")?;
    let p = program.pred_id(pred, 2).ok_or_else(|| format!("no predicate {pred}/2"))?;
    Ok(Goal::single(p, FeatureStructure::tuple(&[&list, &FeatureStructure::of_type(TOP)])))
}
