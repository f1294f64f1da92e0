//! Parsing benchmark over the three lexicon encodings.
//!
//! EXP lists every derived entry; COV derives them at run time through
//! interaction predicates; OPT is COV after propagating every extended
//! entry's interaction call.

use std::collections::HashSet;
use std::fmt::{self, Write};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::covariation::{compile_expanded, compile_lexicon, CompileError};
use crate::fs::FeatureStructure;
use crate::program::Program;
use crate::propagate::{propagate_program, Interpreter, PropagateError, Strategy, Targets};
use crate::signature::Signature;
use crate::solve::{solve_all, SolveConfig, SolveError, SolveStats};
use crate::source::sentence_goal;
use crate::syntax::Grammar;

pub const START_PRED: &str = "start";
pub const TSV_HEADER: &str = "variant\tsentence_id\tms\tclause_tries\tunif_attempts\tchoice_points\tsolutions";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    Exp,
    Cov,
    Opt,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Exp, Variant::Cov, Variant::Opt];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Exp => "EXP",
            Variant::Cov => "COV",
            Variant::Opt => "OPT",
        })
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "exp" => Ok(Variant::Exp),
            "cov" => Ok(Variant::Cov),
            "opt" => Ok(Variant::Opt),
            _ => Err(format!("unknown variant {s:?} (expected exp, cov or opt)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Propagate(#[from] PropagateError),
    #[error("sentence {id}: {source}")]
    Solve { id: usize, source: SolveError },
    #[error("sentence {id}: {message}")]
    Sentence { id: usize, message: String },
    #[error("the lexicon is infinite; a rule-application bound is required")]
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub variants: Vec<Variant>,
    /// Rule applications per derived entry, for every variant.
    pub bound: Option<u32>,
    pub step_limit: Option<u64>,
    /// Each sentence is timed this many times; the minimum is reported.
    pub repeats: u32,
    pub propagation: Interpreter,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            variants: Variant::ALL.to_vec(),
            bound: Some(2),
            step_limit: Some(5_000_000),
            repeats: 3,
            propagation: Interpreter::Specialized { aux_depth: None },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub variant: Variant,
    pub sentence_id: usize,
    pub ms: f64,
    pub stats: SolveStats,
}

pub struct Built {
    pub variant: Variant,
    pub program: Program,
}

/// Compile the requested lexicon variants.
pub fn build_variants(sig: Arc<Signature>, grammar: &Grammar, cfg: &BenchConfig) -> Result<Vec<Built>, BenchError> {
    let cov = compile_lexicon(sig.clone(), grammar)?;
    if cov.meta.nonterminating && cfg.bound.is_none() {
        return Err(BenchError::Unbounded);
    }
    let mut out = Vec::new();
    for &v in &cfg.variants {
        let program = match v {
            Variant::Exp => compile_expanded(sig.clone(), grammar, cfg.bound.unwrap_or(u32::MAX))?.0,
            Variant::Cov => cov.clone(),
            Variant::Opt => {
                let mut s = Strategy::new(cfg.propagation);
                s.step_limit = cfg.step_limit;
                propagate_program(&cov, &Targets::Entries, &s)?.0
            }
        };
        out.push(Built { variant: v, program });
    }
    Ok(out)
}

/// The solve budget shared by all variants.
pub fn parse_config(cfg: &BenchConfig) -> SolveConfig {
    SolveConfig { rule_app_limit: cfg.bound, step_limit: cfg.step_limit, ..SolveConfig::plain() }
}

/// Complete parses of one sentence, as canonical forms.
pub fn parse_set(
    program: &Program,
    sentence: &str,
    id: usize,
    config: &SolveConfig,
) -> Result<(HashSet<FeatureStructure>, SolveStats), BenchError> {
    let goal = match sentence_goal(program, START_PRED, sentence) {
        Ok(g) => g,
        // an unknown word has no parses
        Err(m) if m.starts_with("unknown word") => return Ok((HashSet::new(), SolveStats::default())),
        Err(message) => return Err(BenchError::Sentence { id, message }),
    };
    let (sols, stats) = solve_all(program, &goal, config.clone(), None).map_err(|source| BenchError::Solve { id, source })?;
    let set = sols.iter().filter(|s| !s.partial).map(|s| s.fs.canonical(program.sig())).collect();
    Ok((set, stats))
}

#[derive(Debug)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Sentence ids whose parse sets differ between variants.
    pub mismatches: Vec<usize>,
}

/// Parse every sentence with every variant. Sentence ids start at 1.
pub fn run_bench(built: &[Built], sentences: &[&str], cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    let config = parse_config(cfg);
    let mut rows = Vec::new();
    let mut mismatches = Vec::new();
    for (i, s) in sentences.iter().enumerate() {
        let id = i + 1;
        let mut first: Option<HashSet<FeatureStructure>> = None;
        let mut differs = false;
        for b in built {
            let mut best = f64::INFINITY;
            let mut result = None;
            for _ in 0..cfg.repeats.max(1) {
                let t = Instant::now();
                let r = parse_set(&b.program, s, id, &config)?;
                best = best.min(t.elapsed().as_secs_f64() * 1000.0);
                result = Some(r);
            }
            let (set, stats) = result.expect("at least one run");
            match &first {
                None => first = Some(set),
                Some(f) => differs |= *f != set,
            }
            rows.push(BenchRow { variant: b.variant, sentence_id: id, ms: best, stats });
        }
        if differs {
            mismatches.push(id);
        }
    }
    Ok(BenchReport { rows, mismatches })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Totals {
    pub ms: f64,
    pub clause_tries: u64,
    pub unification_attempts: u64,
    pub choice_points: u64,
    pub solutions: u64,
}

impl BenchReport {
    pub fn totals(&self, v: Variant) -> Option<Totals> {
        let mut t = Totals::default();
        let mut any = false;
        for r in self.rows.iter().filter(|r| r.variant == v) {
            any = true;
            t.ms += r.ms;
            t.clause_tries += r.stats.clause_tries;
            t.unification_attempts += r.stats.unification_attempts;
            t.choice_points += r.stats.choice_points;
            t.solutions += r.stats.solutions;
        }
        any.then_some(t)
    }

    /// (time, clause_tries) of each variant relative to OPT.
    pub fn ratios(&self) -> Vec<(Variant, f64, f64)> {
        let Some(opt) = self.totals(Variant::Opt) else {
            return Vec::new();
        };
        Variant::ALL
            .iter()
            .filter_map(|&v| {
                let t = self.totals(v)?;
                Some((v, t.ms / opt.ms, t.clause_tries as f64 / opt.clause_tries as f64))
            })
            .collect()
    }

    /// Per-sentence rows, then per-variant totals and ratios to OPT.
    /// Times use a fixed three-decimal format; everything else is exact.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(TSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.3}\t{}\t{}\t{}\t{}",
                r.variant,
                r.sentence_id,
                r.ms,
                r.stats.clause_tries,
                r.stats.unification_attempts,
                r.stats.choice_points,
                r.stats.solutions
            );
        }
        if self.rows.is_empty() {
            return out;
        }
        let opt = self.totals(Variant::Opt);
        for v in Variant::ALL {
            let Some(t) = self.totals(v) else { continue };
            let _ = writeln!(
                out,
                "{v}\ttotal\t{:.3}\t{}\t{}\t{}\t{}",
                t.ms, t.clause_tries, t.unification_attempts, t.choice_points, t.solutions
            );
            if let Some(o) = &opt {
                let q = |a: f64, b: f64| if b == 0.0 { f64::NAN } else { a / b };
                let _ = writeln!(
                    out,
                    "{v}\tratio\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}",
                    q(t.ms, o.ms),
                    q(t.clause_tries as f64, o.clause_tries as f64),
                    q(t.unification_attempts as f64, o.unification_attempts as f64),
                    q(t.choice_points as f64, o.choice_points as f64),
                    q(t.solutions as f64, o.solutions as f64)
                );
            }
        }
        out
    }
}
