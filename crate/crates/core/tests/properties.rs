mod common;

use common::*;
use hpsgc_core::covariation::{compile_expanded, compile_lexicon, RuleSet};
use hpsgc_core::index::split_entries;
use hpsgc_core::ops::{msg, subsumes, unify};
use hpsgc_core::propagate::{propagate_program, resolve_targets, Interpreter, Strategy, Targets};
use hpsgc_core::solve::{solve, solve_all, SolveConfig};
use hpsgc_core::source::load;
use hpsgc_core::{FeatureStructure, Goal, Program};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

fn program(seed: u64) -> (Program, Vec<Goal>) {
    let (src, queries) = random_program_text(seed);
    let queries: Vec<&str> = queries.iter().map(String::as_str).collect();
    list_program(&src, &queries)
}

fn sorted(p: &Program, goal: &Goal) -> Vec<String> {
    let (sols, _) = solve(p, goal).unwrap();
    let mut v: Vec<String> = sols.iter().map(|s| format!("{:?}", s.fs.canonical(p.sig()))).collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn subsumption_is_a_preorder(seed in any::<u64>()) {
        let (sig, _) = aux_grammar();
        let mut gen = Gen::new(&sig, seed);
        let a = gen.fs(8);
        let b = gen.relative(&a);
        let c = gen.relative(&b);
        prop_assert!(subsumes(&sig, &a, &a));
        if subsumes(&sig, &a, &b) && subsumes(&sig, &b, &c) {
            prop_assert!(subsumes(&sig, &a, &c));
        }
    }

    #[test]
    fn canonical_form_is_idempotent(seed in any::<u64>()) {
        let (sig, _) = aux_grammar();
        let a = Gen::new(&sig, seed).fs(10);
        let c = a.canonical(&sig);
        prop_assert_eq!(c.canonical(&sig), c.clone());
        prop_assert!(equiv(&sig, &a, &c));
    }

    #[test]
    fn msg_and_unify_absorb(seed in any::<u64>()) {
        let (sig, _) = aux_grammar();
        let mut gen = Gen::new(&sig, seed);
        let a = gen.fs(8);
        let b = gen.relative(&a);
        // a ⊓ (a ⊔ b) = a and a ⊔ (a ⊓ b) = a
        let m = msg(&sig, &a, &b);
        prop_assert!(unify(&sig, &a, &m).unwrap().iso_eq(&sig, &a));
        if let Ok(u) = unify(&sig, &a, &b) {
            prop_assert!(equiv(&sig, &msg(&sig, &a, &u), &a));
        }
        prop_assert!(subsumes(&sig, &FeatureStructure::top(), &a));
    }

    #[test]
    fn solving_is_deterministic(seed in 0u64..10_000) {
        let (p, goals) = program(seed);
        for g in &goals {
            let cfg = SolveConfig::plain().with_step_limit(100_000);
            let first = solve_all(&p, g, cfg.clone(), Some(64));
            let second = solve_all(&p, g, cfg, Some(64));
            prop_assert_eq!(first, second);
        }
    }

    #[test]
    fn a_deep_bound_changes_nothing(seed in 0u64..10_000) {
        let (p, goals) = program(seed);
        for g in &goals {
            let cfg = SolveConfig::plain().with_step_limit(100_000);
            let Ok((exact, _)) = solve_all(&p, g, cfg, Some(200)) else { continue };
            let (bounded, _) = solve_all(&p, g, SolveConfig::depth(16), Some(200)).unwrap();
            prop_assert!(bounded.iter().all(|s| !s.partial));
            prop_assert_eq!(exact, bounded);
        }
    }

    #[test]
    fn propagation_only_specializes_goals(seed in 0u64..10_000) {
        let (p, _) = program(seed);
        let (q, reports) = propagate_program(&p, &Targets::All, &Strategy::new(Interpreter::Plain)).unwrap();
        for r in &reports {
            // later targets may delete the clause
            let Some(clause) = q.clause_by_id(r.target.clause) else { continue };
            let now = clause.body_goal_fs(r.target.body_index);
            prop_assert!(subsumes(p.sig(), &r.original, &now));
        }
    }

    #[test]
    fn propagation_reaches_a_fixpoint(seed in 0u64..10_000) {
        let (p, _) = program(seed);
        let strategy = Strategy::new(Interpreter::Plain);
        let (once, _) = propagate_program(&p, &Targets::All, &strategy).unwrap();
        // an earlier goal can profit from a later rewrite, so allow one extra
        // round, then nothing may change
        let (twice, _) = propagate_program(&once, &Targets::All, &strategy).unwrap();
        let (_, last) = propagate_program(&twice, &Targets::All, &strategy).unwrap();
        prop_assert!(last.iter().all(|r| !r.changed), "{} changes in round three", last.iter().filter(|r| r.changed).count());
    }

    #[test]
    fn target_order_does_not_change_answers(seed in 0u64..10_000) {
        let (p, goals) = program(seed);
        let strategy = Strategy::new(Interpreter::Plain);
        let mut reversed = resolve_targets(&p, &Targets::All);
        reversed.reverse();
        let (a, _) = propagate_program(&p, &Targets::All, &strategy).unwrap();
        let (b, _) = propagate_program(&p, &Targets::List(reversed), &strategy).unwrap();
        for g in &goals {
            if solve_all(&p, g, SolveConfig::plain().with_step_limit(100_000), Some(65)).is_err() {
                continue;
            }
            prop_assert_eq!(sorted(&a, g), sorted(&b, g));
        }
    }

    #[test]
    fn index_returns_exactly_matching_entries(words in prop::collection::vec(0usize..6, 1..20), probe in 0usize..7) {
        let mut text = String::new();
        for (i, w) in words.iter().enumerate() {
            text += &format!("entry (PHON:<\"w{w}\"> CAT:\"c{i}\").\n");
        }
        let sig_text = "type top sub [sign, list, atom].\ntype sign intro [PHON:list, CAT:atom].\ntype list sub [e_list, ne_list].\ntype ne_list intro [FIRST:top, REST:list].\ntype atom.";
        let (sig, g) = load(sig_text, &text, &["\"w6\""]).unwrap();
        let p = compile_lexicon(sig, &g).unwrap();
        let ix = split_entries(&p, &SolveConfig::specialized()).unwrap();
        let w = format!("w{probe}");
        let (sols, _) = ix.lookup(&[&w], &SolveConfig::plain()).unwrap();
        prop_assert_eq!(sols.len(), words.iter().filter(|&&x| x == probe).count());
    }
}

#[test]
fn covariation_agrees_with_expansion() {
    let (sig, g) = aux_grammar();
    let cov = compile_lexicon(sig.clone(), &g).unwrap();
    for bound in 0..=2 {
        let (exp, _) = compile_expanded(sig.clone(), &g, bound).unwrap();
        let lex = |p: &Program| Goal::single(p.pred_id("lex", 1).unwrap(), FeatureStructure::top());
        let cfg = SolveConfig::plain().with_rule_app_limit(bound);
        let (a, _) = solve_all(&cov, &lex(&cov), cfg, None).unwrap();
        let (b, _) = solve(&exp, &lex(&exp)).unwrap();
        let set = |v: &[hpsgc_core::solve::Solution]| {
            let mut s: Vec<String> = v.iter().map(|s| format!("{:?}", s.fs.canonical(&sig))).collect();
            s.sort();
            s.dedup();
            s
        };
        assert_eq!(set(&a), set(&b), "bound {bound}");
    }
}

#[test]
fn frames_are_prefix_free() {
    for (sig, g) in [aux_grammar(), schema_grammar()] {
        let rules = RuleSet::new(&g, &sig).unwrap();
        for f in &rules.frames {
            for p in &f.paths {
                for q in &f.paths {
                    assert!(p == q || !q.starts_with(p), "{}: {p:?} is a prefix of {q:?}", f.rule);
                }
            }
        }
    }
}

#[test]
fn interaction_clauses_follow_the_automaton() {
    let (sig, g) = aux_grammar();
    let rules = RuleSet::new(&g, &sig).unwrap();
    let cov = compile_lexicon(sig, &g).unwrap();
    for state in 0..rules.automaton.states.len() {
        let name = hpsgc_core::covariation::interaction_name(state);
        let pred = cov.pred_id(&name, 2).unwrap();
        let permitted = (0..rules.rules.len()).filter(|&r| rules.automaton.permits(state, r)).count();
        // one clause per permitted rule plus the identity clause
        assert_eq!(cov.clauses_of(pred).len(), permitted + 1, "{name}");
        assert!(cov.is_interaction(pred));
    }
}
