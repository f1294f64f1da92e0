use std::fmt;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use hpsgc_core::bench::{build_variants, run_bench, BenchConfig, Variant, START_PRED};
use hpsgc_core::compiled::{read_compiled, write_compiled};
use hpsgc_core::covariation::{self, compile_expanded};
use hpsgc_core::index::split_entries;
use hpsgc_core::propagate::{propagate_program, Interpreter, OnEmpty, PropagateError, Strategy, Target, Targets};
use hpsgc_core::solve::{Mode, SolveConfig, Solver};
use hpsgc_core::source::{load, plain_program, sentence_goal};
use hpsgc_core::syntax::{parse_query, print_fs, print_program, Grammar, Style};
use hpsgc_core::{ClauseId, Goal, Program, Signature};

use crate::{Budget, LexVariant, OnEmptyArg, Source};

// A closed pipe (`hpsgc print | head`) ends the command quietly.
fn emit(args: fmt::Arguments, newline: bool) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let r = out.write_fmt(args).and_then(|_| if newline { out.write_all(b"\n") } else { Ok(()) });
    match r {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => panic!("writing to stdout: {e}"),
        Ok(()) => {}
    }
}

macro_rules! out {
    ($($t:tt)*) => { emit(format_args!($($t)*), false) };
}

macro_rules! outln {
    ($($t:tt)*) => { emit(format_args!($($t)*), true) };
}

/// A failed command and its exit code class.
pub enum Failure {
    /// Bad input: diagnostics, refused requests, unreadable files.
    User(String),
    /// An engine invariant did not hold.
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> ExitCode {
        match self {
            Failure::User(_) => ExitCode::from(1),
            Failure::Internal(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::User(m) => f.write_str(m),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

type R = Result<(), Failure>;

fn user(e: impl fmt::Display) -> Failure {
    Failure::User(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::User(format!("{}: {e}", path.display())))
}

fn load_source(src: &Source, extra: &[&str]) -> Result<(Arc<Signature>, Grammar), Failure> {
    let sig = read(&src.signature)?;
    let mut text = String::new();
    for g in &src.grammar {
        text.push_str(&read(g)?);
        text.push('\n');
    }
    load(&sig, &text, extra).map_err(|e| {
        let which = match e {
            hpsgc_core::source::LoadError::Signature(_) => src.signature.display().to_string(),
            _ => src.grammar.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join("+"),
        };
        Failure::User(e.diagnostics().iter().map(|d| format!("{which}:{d}")).collect::<Vec<_>>().join("\n"))
    })
}

fn load_compiled(path: &Path) -> Result<(Program, Option<hpsgc_core::index::IndexedLexicon>), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::User(format!("{}: {e}", path.display())))?;
    read_compiled(&bytes).map_err(|e| Failure::User(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> R {
    fs::write(path, bytes).map_err(|e| Failure::User(format!("{}: {e}", path.display())))
}

pub fn check(src: &Source) -> R {
    let (sig, g) = load_source(src, &[])?;
    let p = plain_program(sig.clone(), &g);
    for u in p.undefined_preds() {
        // the lexicon predicate is generated from the entries
        if p.pred(u).name == covariation::ENTRY_PRED && p.pred(u).arity == 1 && !g.entries.is_empty() {
            continue;
        }
        eprintln!("warning: predicate {} is called but not defined", p.pred(u));
    }
    outln!(
        "ok: {} types, {} features, {} clauses, {} lexical rules, {} entries",
        sig.declared_count(),
        sig.feature_count(),
        g.clauses.len(),
        g.rules.len(),
        g.entries.len()
    );
    Ok(())
}

pub fn compile_lexicon(src: &Source, variant: LexVariant, bound: Option<u32>, out: &Path) -> R {
    let (sig, g) = load_source(src, &[])?;
    let program = match variant {
        LexVariant::Cov => covariation::compile_lexicon(sig, &g).map_err(user)?,
        LexVariant::Exp => {
            let cov = covariation::compile_lexicon(sig.clone(), &g).map_err(user)?;
            if cov.meta.nonterminating && bound.is_none() {
                return Err(user("the lexical rules can apply without limit; give --bound"));
            }
            let (p, e) = compile_expanded(sig, &g, bound.unwrap_or(u32::MAX)).map_err(user)?;
            eprintln!("{} entries{}", e.entries.len(), if e.truncated { " (truncated at the bound)" } else { "" });
            p
        }
    };
    write(out, &write_compiled(&program, None))?;
    eprintln!("wrote {} clauses to {}", program.clauses().len(), out.display());
    Ok(())
}

fn parse_interpreter(s: &str) -> Result<Interpreter, Failure> {
    let num = |t: &str| t.parse::<u32>().map_err(|_| user(format!("bad number in interpreter {s:?}")));
    match s.split_once(':') {
        None if s == "plain" => Ok(Interpreter::Plain),
        None if s == "specialized" => Ok(Interpreter::Specialized { aux_depth: None }),
        Some(("depth", n)) => Ok(Interpreter::DepthBounded(num(n)?)),
        Some(("specialized", n)) => Ok(Interpreter::Specialized { aux_depth: Some(num(n)?) }),
        _ => Err(user(format!("unknown interpreter {s:?} (plain, specialized[:N], depth:N)"))),
    }
}

fn parse_targets(spec: &str) -> Result<Targets, Failure> {
    match spec {
        "all" => Ok(Targets::All),
        "entries" => Ok(Targets::Entries),
        path => {
            let text = read(Path::new(path))?;
            let mut out = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.split('%').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let nums: Vec<u32> = line.split_whitespace().map(str::parse).collect::<Result<_, _>>()
                    .map_err(|_| user(format!("{path}:{}: expected `CLAUSE_ID BODY_INDEX`", i + 1)))?;
                let [c, b] = nums[..] else {
                    return Err(user(format!("{path}:{}: expected `CLAUSE_ID BODY_INDEX`", i + 1)));
                };
                out.push(Target { clause: ClauseId(c), body_index: b as usize });
            }
            Ok(Targets::List(out))
        }
    }
}

pub fn propagate(
    input: &Path,
    targets: &str,
    interpreter: &str,
    on_empty: OnEmptyArg,
    step_limit: u64,
    index: bool,
    out: &Path,
) -> R {
    let (program, _) = load_compiled(input)?;
    let strategy = Strategy {
        interpreter: parse_interpreter(interpreter)?,
        on_empty: match on_empty {
            OnEmptyArg::Delete => OnEmpty::DeleteClause,
            OnEmptyArg::Error => OnEmpty::Error,
        },
        step_limit: Some(step_limit),
    };
    let (opt, reports) = propagate_program(&program, &parse_targets(targets)?, &strategy).map_err(|e| match e {
        PropagateError::Inconsistent { .. } => Failure::Internal(e.to_string()),
        e => user(e),
    })?;
    for r in &reports {
        outln!("{r}");
        if r.deleted {
            eprintln!("warning: clause {} can never succeed and was removed", r.target.clause);
        }
    }
    let ix = if index {
        let ix = split_entries(&opt, &SolveConfig { step_limit: Some(step_limit), ..SolveConfig::specialized() }).map_err(user)?;
        for u in &ix.unindexed {
            eprintln!("warning: entry clause {} not indexed ({}); it is scanned on every lookup", u.entry, u.reason);
        }
        outln!("index: {} keys, {} fallback entries", ix.buckets.len(), ix.fallback.len());
        Some(ix)
    } else {
        None
    };
    let bytes = match &ix {
        Some(ix) => write_compiled(&ix.program, Some(ix)),
        None => write_compiled(&opt, None),
    };
    write(out, &bytes)
}

fn solve_config(program: &Program, budget: &Budget) -> Result<SolveConfig, Failure> {
    if program.meta.nonterminating && budget.depth.is_none() && budget.rule_apps.is_none() {
        return Err(user(
            "the program may not terminate under plain resolution; give --depth or --rule-apps",
        ));
    }
    Ok(SolveConfig {
        mode: Some(budget.depth.map_or(Mode::Plain, |max| Mode::DepthBounded { max })),
        step_limit: Some(budget.step_limit),
        rule_app_limit: budget.rule_apps,
        first_candidates: None,
    })
}

fn run(program: &Program, goal: &Goal, config: SolveConfig, max: Option<usize>, clause_stats: bool) -> R {
    let mut solver = Solver::new(program, goal, config).map_err(user)?;
    let mut n = 0;
    while max.map_or(true, |m| n < m) {
        match solver.next_solution().map_err(user)? {
            None => break,
            Some(s) => {
                n += 1;
                let mark = if s.partial { " (partial)" } else { "" };
                outln!("[{n}]{mark} {}", print_fs(program.sig(), &s.fs, Style::Compact));
            }
        }
    }
    let st = solver.stats();
    outln!(
        "{n} solution(s); clause_tries={} unif_attempts={} choice_points={}",
        st.clause_tries, st.unification_attempts, st.choice_points
    );
    if clause_stats {
        for (c, t) in program.clauses().iter().zip(&st.tries_by_clause) {
            if *t > 0 {
                outln!("  clause {} ({}): {t}", c.id, program.pred(c.head.pred));
            }
        }
    }
    Ok(())
}

pub fn solve(input: &Path, goal: &str, budget: &Budget, max: Option<usize>) -> R {
    let (program, _) = load_compiled(input)?;
    let (shape, fs) = parse_query(goal, program.sig()).map_err(|d| user(format!("goal:{d}")))?;
    let preds: Vec<_> = shape
        .iter()
        .map(|(n, k)| program.pred_id(n, *k).map(|p| (p, *k)).ok_or_else(|| user(format!("unknown predicate {n}/{k}"))))
        .collect::<Result<_, _>>()?;
    let config = solve_config(&program, budget)?;
    run(&program, &Goal::conjunction(&preds, fs), config, max, false)
}

pub fn parse(input: &Path, words: &str, budget: &Budget, clause_stats: bool) -> R {
    let (program, _) = load_compiled(input)?;
    let config = solve_config(&program, budget)?;
    match sentence_goal(&program, START_PRED, words) {
        Ok(goal) => run(&program, &goal, config, None, clause_stats),
        Err(m) if m.starts_with("unknown word") => {
            outln!("0 solution(s): {m}");
            Ok(())
        }
        Err(m) => Err(user(m)),
    }
}

pub fn lookup(input: &Path, word: &str, budget: &Budget) -> R {
    let (_, ix) = load_compiled(input)?;
    let ix = ix.ok_or_else(|| user("the file has no index; build one with `propagate --index`"))?;
    let config = solve_config(&ix.program, budget)?;
    let words: Vec<&str> = word.split_whitespace().collect();
    let Some(mut solver) = ix.lookup_iter(&words, &config).map_err(user)? else {
        outln!("0 entries");
        return Ok(());
    };
    let mut n = 0;
    while let Some(s) = solver.next_solution().map_err(user)? {
        n += 1;
        let mark = if s.partial { " (partial)" } else { "" };
        outln!("[{n}]{mark} {}", print_fs(ix.program.sig(), &s.fs, Style::Compact));
    }
    outln!("{n} entries; clause_tries={}", solver.stats().clause_tries);
    Ok(())
}

pub fn print(input: &Path) -> R {
    let (program, ix) = load_compiled(input)?;
    out!("{}", print_program(&program));
    if let Some(ix) = ix {
        for k in ix.keys() {
            let ids: Vec<String> = ix.buckets[k].iter().map(|c| c.to_string()).collect();
            outln!("% index {} -> {}", k.join(" "), ids.join(" "));
        }
    }
    Ok(())
}

pub fn bench(src: &Source, sentences: &Path, variants: &[String], bound: Option<u32>, format: &str, repeats: u32) -> R {
    if format != "tsv" {
        return Err(user(format!("unsupported format {format:?} (only tsv)")));
    }
    let text = read(sentences)?;
    let lines: Vec<&str> = hpsgc_core::corpus::sentences(&text).collect();
    let (sig, g) = load_source(src, &[&text])?;
    let variants: Vec<Variant> = variants.iter().map(|v| v.parse()).collect::<Result<_, _>>().map_err(user)?;
    let cfg = BenchConfig { variants, bound, repeats, ..BenchConfig::default() };
    let built = build_variants(sig, &g, &cfg).map_err(user)?;
    let report = run_bench(&built, &lines, &cfg).map_err(user)?;
    out!("{}", report.to_tsv());
    if !report.mismatches.is_empty() {
        return Err(Failure::Internal(format!("parse sets differ between variants for sentences {:?}", report.mismatches)));
    }
    let r = report.ratios();
    if !r.is_empty() {
        let show = |v: Variant, i: usize| {
            r.iter().find(|x| x.0 == v).map(|x| format!("{:.2}", if i == 0 { x.1 } else { x.2 })).unwrap_or("-".into())
        };
        eprintln!(
            "time OPT:EXP:COV = 1 : {} : {}   clause_tries OPT:EXP:COV = 1 : {} : {}",
            show(Variant::Exp, 0),
            show(Variant::Cov, 0),
            show(Variant::Exp, 1),
            show(Variant::Cov, 1)
        );
    }
    Ok(())
}
