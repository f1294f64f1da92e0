use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn grammar(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/grammars").join(name)
}

fn hpsgc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpsgc")).args(args).output().expect("run hpsgc")
}

fn ok(args: &[&str]) -> String {
    let out = hpsgc(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    hpsgc(args).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Aux {
    dir: TempDir,
}

impl Aux {
    fn new() -> Aux {
        Aux { dir: TempDir::new().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn compile(&self, extra: &[&str]) -> PathBuf {
        let out = self.path("cov.hpsgc");
        let (sig, gr) = (grammar("aux.sig"), grammar("aux.hpsg"));
        let mut args = vec!["compile-lexicon", "-s", p(&sig), "-g", p(&gr), "-o", p(&out)];
        args.extend(extra);
        ok(&args);
        out
    }

    fn opt(&self) -> PathBuf {
        let cov = self.compile(&[]);
        let out = self.path("opt.hpsgc");
        ok(&["propagate", "-i", p(&cov), "--index", "-o", p(&out)]);
        out
    }
}

#[test]
fn check_accepts_shipped_grammars() {
    for (s, g) in [("aux.sig", "aux.hpsg"), ("schema.sig", "schema.hpsg")] {
        let out = ok(&["check", "-s", p(&grammar(s)), "-g", p(&grammar(g))]);
        assert!(out.starts_with("ok:"), "{out}");
    }
}

#[test]
fn check_reports_positions_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.hpsg");
    std::fs::write(&bad, "p((nosuchtype)).\n").unwrap();
    let out = hpsgc(&["check", "-s", p(&grammar("aux.sig")), "-g", p(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("1:"), "{err}");

    let empty = dir.path().join("empty.hpsg");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&["check", "-s", p(&grammar("aux.sig")), "-g", p(&empty)]), 0);
    assert_eq!(code(&["check"]), 2);
    assert_eq!(code(&["no-such-command"]), 2);
}

#[test]
fn compile_lexicon_matches_golden() {
    let aux = Aux::new();
    let cov = aux.compile(&[]);
    let printed = ok(&["print", "-i", p(&cov)]);
    let golden = std::fs::read_to_string(grammar("../tests/golden/aux_cov.txt")).unwrap();
    assert_eq!(printed, golden);
}

#[test]
fn expanded_bound_zero_is_the_base_lexicon() {
    let aux = Aux::new();
    let exp = aux.compile(&["--variant", "exp", "--bound", "0"]);
    let printed = ok(&["print", "-i", p(&exp)]);
    let entries = std::fs::read_to_string(grammar("aux.hpsg")).unwrap().matches("\nentry ").count();
    assert_eq!(printed.lines().filter(|l| l.starts_with("lex(")).count(), entries);
    assert!(!printed.contains("interaction_"));
}

#[test]
fn empty_target_list_leaves_the_program_unchanged() {
    let aux = Aux::new();
    let cov = aux.compile(&[]);
    let targets = aux.path("none.targets");
    std::fs::write(&targets, "% nothing\n").unwrap();
    let out = aux.path("same.hpsgc");
    ok(&["propagate", "-i", p(&cov), "--targets", p(&targets), "-o", p(&out)]);
    assert_eq!(std::fs::read(&cov).unwrap(), std::fs::read(&out).unwrap());
}

#[test]
fn solve_refuses_unbounded_runs_on_recursive_lexica() {
    let aux = Aux::new();
    let cov = aux.compile(&[]);
    assert_eq!(code(&["solve", "-i", p(&cov), "--goal", "lex(#1)"]), 1);
    let out = ok(&["solve", "-i", p(&cov), "--goal", "third_fin(\"können\", #1)", "--depth", "3"]);
    assert!(out.contains("[1] \"können\", \"kann\""), "{out}");
    assert!(out.contains("1 solution(s)"), "{out}");
}

#[test]
fn modal_solutions_at_depth_six() {
    let aux = Aux::new();
    let cov = aux.compile(&[]);
    let out = ok(&["solve", "-i", p(&cov), "--goal", "lex((PHON:<\"können\">))", "--depth", "6"]);
    let full = out.lines().filter(|l| l.starts_with('[') && !l.contains("(partial)")).count();
    let partial = out.lines().filter(|l| l.contains("(partial)")).count();
    // lex, interaction_0 and one level per extraction: zero to four
    // extractions finish inside the bound. Each modal leaves three cut-off
    // branches at the bound (two extraction steps, one finite form) whose
    // phonology is still open enough to match.
    assert_eq!((full, partial), (5, 12), "{out}");
    let mut extracted: Vec<usize> = out
        .lines()
        .filter(|l| l.starts_with('[') && !l.contains("(partial)"))
        .map(|l| l.split("SLASH:<").nth(1).map_or(0, |rest| rest.split("(lsign").next().unwrap().matches(", ").count() + 1))
        .collect();
    extracted.sort();
    assert_eq!(extracted, [0, 1, 2, 3, 4]);
}

#[test]
fn parse_and_lookup_use_the_index() {
    let aux = Aux::new();
    let opt = aux.opt();
    let out = ok(&["parse", "-i", p(&opt), "--words", "Peter Maria sehen kann", "--rule-apps", "2"]);
    assert!(out.contains("solution(s)") && !out.starts_with("0 solution"), "{out}");
    let out = ok(&["parse", "-i", p(&opt), "--words", "Peter Zebra", "--rule-apps", "2"]);
    assert!(out.starts_with("0 solution(s)"), "{out}");

    let out = ok(&["lookup", "-i", p(&opt), "--word", "kann", "--rule-apps", "2"]);
    assert!(out.contains("2 entries"), "{out}");
    let out = ok(&["lookup", "-i", p(&opt), "--word", "Zebra", "--rule-apps", "2"]);
    assert_eq!(out.trim(), "0 entries");
    let cov = aux.compile(&[]);
    assert_eq!(code(&["lookup", "-i", p(&cov), "--word", "kann", "--rule-apps", "2"]), 1);
}

#[test]
fn schema_pruning_through_the_cli() {
    let dir = TempDir::new().unwrap();
    let (before, after) = (dir.path().join("before.hpsgc"), dir.path().join("after.hpsgc"));
    ok(&["compile-lexicon", "-s", p(&grammar("schema.sig")), "-g", p(&grammar("schema.hpsg")), "-o", p(&before)]);
    let report = ok(&[
        "propagate", "-i", p(&before), "--targets", p(&grammar("schema.targets")), "--interpreter", "depth:8",
        "-o", p(&after),
    ]);
    assert!(report.contains("goal made more specific"), "{report}");
    let printed = ok(&["print", "-i", p(&after)]);
    let head_adjunct = printed.lines().nth(3).unwrap();
    let mother = head_adjunct.split(":-").next().unwrap();
    assert!(mother.contains("HEAD:#2 subst "), "{head_adjunct}");

    let tries = |file: &Path| -> String {
        let out = ok(&["parse", "-i", p(file), "--words", "die Liste", "--clause-stats"]);
        assert!(out.contains("1 solution(s)"), "{out}");
        out.lines().find(|l| l.trim_start().starts_with("clause 3 ")).unwrap_or("").to_string()
    };
    assert!(tries(&before).ends_with(": 1"));
    assert_eq!(tries(&after), "");
    let out = ok(&["parse", "-i", p(&after), "--words", "die kleine Liste"]);
    assert!(out.contains("1 solution(s)"), "{out}");
}

#[test]
fn bench_prints_header_only_without_sentences() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("none.txt");
    std::fs::write(&empty, "").unwrap();
    let out = ok(&[
        "bench", "-s", p(&grammar("aux.sig")), "-g", p(&grammar("aux.hpsg")), "--sentences", p(&empty), "--bound", "2",
    ]);
    assert_eq!(out, "variant\tsentence_id\tms\tclause_tries\tunif_attempts\tchoice_points\tsolutions\n");
}

#[test]
fn bench_counters_are_deterministic() {
    let run = || {
        let out = ok(&[
            "bench", "-s", p(&grammar("aux.sig")), "-g", p(&grammar("aux.hpsg")), "--sentences",
            p(&grammar("aux.sentences")), "--repeats", "1", "--bound", "2",
        ]);
        out.lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split('\t').collect();
                f.remove(2);
                f.join("\t")
            })
            .collect::<Vec<_>>()
    };
    let first = run();
    assert_eq!(first.len(), 1 + 60 + 6);
    assert_eq!(first, run());
}

#[test]
fn bench_refuses_unbounded_expansion() {
    let out = hpsgc(&[
        "bench", "-s", p(&grammar("aux.sig")), "-g", p(&grammar("aux.hpsg")), "--sentences",
        p(&grammar("aux.sentences")), "--variants", "exp",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bound"));
}
