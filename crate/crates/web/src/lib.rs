//! Browser demo over the bundled grammars: parse with the three lexicon
//! encodings, look words up in the phonology index, and watch the
//! head-adjunct schema get pruned.

use std::fmt::Write;

use hpsgc_core::bench::{build_variants, parse_config, BenchConfig, Built, Variant, START_PRED};
use hpsgc_core::corpus::{aux, schema};
use hpsgc_core::covariation::compile_lexicon;
use hpsgc_core::index::{split_entries, IndexedLexicon};
use hpsgc_core::propagate::{propagate_program, Interpreter, Strategy, Target, Targets};
use hpsgc_core::solve::{solve_all, SolveConfig};
use hpsgc_core::source::{load, sentence_goal};
use hpsgc_core::syntax::{print_clause, print_fs, Style};
use hpsgc_core::{ClauseId, Program};
use wasm_bindgen::prelude::*;

/// Clause id of the head-adjunct schema in the bundled schema grammar.
const HEAD_ADJUNCT: ClauseId = ClauseId(3);

#[wasm_bindgen]
pub struct Demo {
    variants: Vec<Built>,
    index: IndexedLexicon,
    config: BenchConfig,
    schema: (Program, Program),
}

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

impl Demo {
    pub fn build() -> Result<Demo, String> {
        let (sig, g) = load(aux::SIGNATURE, aux::GRAMMAR, &[aux::SENTENCES]).map_err(|e| e.to_string())?;
        let config = BenchConfig::default();
        let variants = build_variants(sig, &g, &config).map_err(|e| e.to_string())?;
        let opt = &variants.iter().find(|b| b.variant == Variant::Opt).expect("OPT built").program;
        let index = split_entries(opt, &SolveConfig::specialized()).map_err(|e| e.to_string())?;

        let (sig, g) = load(schema::SIGNATURE, schema::GRAMMAR, &[]).map_err(|e| e.to_string())?;
        let before = compile_lexicon(sig, &g).map_err(|e| e.to_string())?;
        let target = Targets::List(vec![Target { clause: HEAD_ADJUNCT, body_index: 1 }]);
        let (after, _) = propagate_program(&before, &target, &Strategy::new(Interpreter::DepthBounded(8)))
            .map_err(|e| e.to_string())?;
        Ok(Demo { variants, index, config, schema: (before, after) })
    }

    /// Parses and counters for each lexicon variant.
    pub fn parse_text(&self, words: &str) -> String {
        let mut out = String::new();
        let cfg = parse_config(&self.config);
        for b in &self.variants {
            let goal = match sentence_goal(&b.program, START_PRED, words) {
                Ok(g) => g,
                Err(m) => {
                    let _ = writeln!(out, "{}: {m}", b.variant);
                    continue;
                }
            };
            match solve_all(&b.program, &goal, cfg.clone(), None) {
                Ok((sols, st)) => {
                    let _ = writeln!(
                        out,
                        "{}: {} parse(s), {} clause tries, {} unifications",
                        b.variant,
                        sols.len(),
                        st.clause_tries,
                        st.unification_attempts
                    );
                    if b.variant == Variant::Opt {
                        for s in &sols {
                            let _ = writeln!(out, "  {}", print_fs(b.program.sig(), &s.fs.root_fs(1), Style::Compact));
                        }
                    }
                }
                Err(e) => {
                    let _ = writeln!(out, "{}: {e}", b.variant);
                }
            }
        }
        out
    }

    pub fn lookup_text(&self, word: &str) -> String {
        let words: Vec<&str> = word.split_whitespace().collect();
        let cfg = parse_config(&self.config);
        match self.index.lookup(&words, &cfg) {
            Ok((sols, st)) => {
                let mut out = format!("{} entr{} ({} clause tries)\n", sols.len(), if sols.len() == 1 { "y" } else { "ies" }, st.clause_tries);
                for s in sols {
                    let _ = writeln!(out, "  {}", print_fs(self.index.program.sig(), &s.fs, Style::Compact));
                }
                out
            }
            Err(e) => e.to_string(),
        }
    }

    /// The head-adjunct clause before and after propagation, and how often
    /// it is tried when parsing `words`.
    pub fn schema_text(&self, words: &str) -> String {
        let mut out = String::new();
        for (label, p) in [("before", &self.schema.0), ("after", &self.schema.1)] {
            let clause = p.clause_by_id(HEAD_ADJUNCT).expect("head-adjunct clause");
            let _ = writeln!(out, "{label}:\n{}", print_clause(p, clause, Style::Indented));
            match sentence_goal(p, START_PRED, words) {
                Ok(goal) => match solve_all(p, &goal, SolveConfig::plain().with_step_limit(1_000_000), None) {
                    Ok((sols, st)) => {
                        let _ = writeln!(
                            out,
                            "  \"{words}\": {} parse(s), head-adjunct tried {} time(s)\n",
                            sols.len(),
                            st.tries_for(p, HEAD_ADJUNCT)
                        );
                    }
                    Err(e) => {
                        let _ = writeln!(out, "  {e}\n");
                    }
                },
                Err(m) => {
                    let _ = writeln!(out, "  {m}\n");
                }
            }
        }
        out
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<Demo, JsError> {
        Demo::build().map_err(err)
    }

    pub fn parse(&self, words: &str) -> String {
        self.parse_text(words)
    }

    pub fn lookup(&self, word: &str) -> String {
        self.lookup_text(word)
    }

    pub fn schema(&self, words: &str) -> String {
        self.schema_text(words)
    }

    /// The bundled benchmark sentences, one per line.
    pub fn sentences() -> String {
        hpsgc_core::corpus::sentences(aux::SENTENCES).collect::<Vec<_>>().join("\n")
    }
}
