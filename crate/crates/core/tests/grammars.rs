mod common;

use common::*;
use hpsgc_core::bench::START_PRED;
use hpsgc_core::covariation::{compile_expanded, compile_lexicon, RuleSet};
use hpsgc_core::index::split_entries;
use hpsgc_core::propagate::{propagate_program, Interpreter, Strategy, Targets};
use hpsgc_core::solve::{solve_all, SolveConfig};
use hpsgc_core::source::sentence_goal;
use hpsgc_core::syntax::{print_clause, print_program, Style};

const GOLDEN_COV: &str = include_str!("golden/aux_cov.txt");

#[test]
fn aux_frames_and_automaton() {
    let (sig, g) = aux_grammar();
    let rules = RuleSet::new(&g, &sig).unwrap();
    let frame = |name: &str| -> Vec<String> {
        let f = rules.frames.iter().find(|f| f.rule == name).unwrap();
        let mut v: Vec<String> = f.named_paths(&sig).iter().map(|p| p.to_string()).collect();
        v.sort();
        v
    };
    assert_eq!(frame("celr"), ["CONT", "PHON", "VFORM"]);
    assert_eq!(frame("finlr"), ["CONT", "SLASH", "SUBCAT"]);
    assert!(rules.automaton.has_cycle());
}

#[test]
fn aux_covariation_program_is_stable() {
    let (sig, g) = aux_grammar();
    let cov = compile_lexicon(sig, &g).unwrap();
    let text = print_program(&cov);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/aux_cov.txt"), &text).unwrap();
        return;
    }
    assert_eq!(text, GOLDEN_COV);
    assert!(cov.meta.nonterminating);
}

#[test]
fn every_sentence_parses_with_each_lexicon() {
    let (sig, g) = aux_grammar();
    let cov = compile_lexicon(sig.clone(), &g).unwrap();
    let (exp, expansion) = compile_expanded(sig, &g, 2).unwrap();
    assert!(!exp.meta.nonterminating);
    assert!(!expansion.entries.is_empty());
    let cfg = SolveConfig::plain().with_rule_app_limit(2).with_step_limit(2_000_000);
    for s in aux_sentences() {
        for p in [&cov, &exp] {
            let goal = sentence_goal(p, START_PRED, s).unwrap();
            let (sols, _) = solve_all(p, &goal, cfg.clone(), None).unwrap();
            assert!(!sols.is_empty(), "no parse for {s:?}");
        }
    }
}

#[test]
fn modal_factor_lifts_phonology_and_content() {
    let (sig, g) = aux_grammar();
    let cov = compile_lexicon(sig, &g).unwrap();
    let (opt, reports) =
        propagate_program(&cov, &Targets::Entries, &Strategy::new(Interpreter::Specialized { aux_depth: None })).unwrap();
    assert!(reports.iter().all(|r| !r.deleted));
    let lex = opt.pred_id("lex", 1).unwrap();
    let modal = opt
        .clauses_of(lex)
        .iter()
        .map(|&i| print_clause(&opt, opt.clause(i), Style::Compact))
        .find(|t| t.contains("\"können\""))
        .unwrap();
    let head = modal.split(":-").next().unwrap();
    assert!(head.contains("PHON"), "{modal}");
    assert!(head.contains("\"koennen\""), "{modal}");
}

#[test]
fn index_separates_inflected_forms() {
    let (sig, g) = aux_grammar();
    let cov = compile_lexicon(sig, &g).unwrap();
    let (opt, _) =
        propagate_program(&cov, &Targets::Entries, &Strategy::new(Interpreter::Specialized { aux_depth: None })).unwrap();
    let ix = split_entries(&opt, &SolveConfig::specialized()).unwrap();
    assert!(ix.fallback.is_empty());
    assert!(ix.unindexed.is_empty());
    let kann = ix.buckets.get(&vec!["kann".to_string()]).unwrap();
    let koennen = ix.buckets.get(&vec!["können".to_string()]).unwrap();
    assert!(kann.iter().all(|c| !koennen.contains(c)));
    let cfg = SolveConfig::plain().with_rule_app_limit(2);
    let (sols, _) = ix.lookup(&["kann"], &cfg).unwrap();
    assert_eq!(sols.len(), 2);
    assert!(ix.lookup(&["Zebra"], &cfg).unwrap().0.is_empty());
}
