use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod cmd;

/// Typed feature structure grammars: check, compile lexica, propagate
/// constraints off-line, solve, parse and benchmark.
#[derive(Parser)]
#[command(name = "hpsgc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Source {
    /// Type signature file.
    #[arg(long, short = 's')]
    pub signature: PathBuf,
    /// Grammar file(s): clauses, lexical rules and entries. Repeatable.
    #[arg(long, short = 'g', required = true)]
    pub grammar: Vec<PathBuf>,
}

#[derive(Args, Clone, Default)]
pub struct Budget {
    /// Depth bound; literals at this depth succeed unexpanded (partial solutions).
    #[arg(long)]
    pub depth: Option<u32>,
    /// Maximum lexical-rule applications per branch.
    #[arg(long)]
    pub rule_apps: Option<u32>,
    /// Give up after this many unification attempts.
    #[arg(long, default_value_t = 10_000_000)]
    pub step_limit: u64,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum LexVariant {
    Cov,
    Exp,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum OnEmptyArg {
    Delete,
    Error,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a signature and grammar.
    Check {
        #[command(flatten)]
        src: Source,
    },
    /// Compile grammar and lexicon into a program file.
    CompileLexicon {
        #[command(flatten)]
        src: Source,
        #[arg(long, value_enum, default_value = "cov")]
        variant: LexVariant,
        /// Rule applications for the expanded lexicon.
        #[arg(long)]
        bound: Option<u32>,
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Propagate solutions of body goals into a compiled program.
    Propagate {
        #[arg(long, short = 'i')]
        input: PathBuf,
        /// `all`, `entries`, or a file of `CLAUSE_ID BODY_INDEX` lines.
        #[arg(long, default_value = "entries")]
        targets: String,
        /// `specialized`, `specialized:N`, `depth:N` or `plain`.
        #[arg(long, default_value = "specialized")]
        interpreter: String,
        #[arg(long, value_enum, default_value = "delete")]
        on_empty: OnEmptyArg,
        #[arg(long, default_value_t = 10_000_000)]
        step_limit: u64,
        /// Also build the phonology index into the output.
        #[arg(long)]
        index: bool,
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Solve a goal such as `append(#1, #2, <"a">)`.
    Solve {
        #[arg(long, short = 'i')]
        input: PathBuf,
        #[arg(long)]
        goal: String,
        #[command(flatten)]
        budget: Budget,
        #[arg(long)]
        max_solutions: Option<usize>,
    },
    /// Parse a sentence with the `start/2` predicate.
    Parse {
        #[arg(long, short = 'i')]
        input: PathBuf,
        #[arg(long)]
        words: String,
        #[command(flatten)]
        budget: Budget,
        /// Print clause tries per clause.
        #[arg(long)]
        clause_stats: bool,
    },
    /// Look a word up in the phonology index.
    Lookup {
        #[arg(long, short = 'i', alias = "lexicon")]
        input: PathBuf,
        #[arg(long)]
        word: String,
        #[command(flatten)]
        budget: Budget,
    },
    /// Print a compiled program as text.
    Print {
        #[arg(long, short = 'i')]
        input: PathBuf,
    },
    /// Time parsing with the expanded, covariation and propagated lexica.
    Bench {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        sentences: PathBuf,
        #[arg(long, default_value = "exp,cov,opt", value_delimiter = ',')]
        variants: Vec<String>,
        /// Rule applications for every variant.
        #[arg(long)]
        bound: Option<u32>,
        #[arg(long, default_value = "tsv")]
        format: String,
        #[arg(long, default_value_t = 3)]
        repeats: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { src } => cmd::check(&src),
        Command::CompileLexicon { src, variant, bound, out } => cmd::compile_lexicon(&src, variant, bound, &out),
        Command::Propagate { input, targets, interpreter, on_empty, step_limit, index, out } => {
            cmd::propagate(&input, &targets, &interpreter, on_empty, step_limit, index, &out)
        }
        Command::Solve { input, goal, budget, max_solutions } => cmd::solve(&input, &goal, &budget, max_solutions),
        Command::Parse { input, words, budget, clause_stats } => cmd::parse(&input, &words, &budget, clause_stats),
        Command::Lookup { input, word, budget } => cmd::lookup(&input, &word, &budget),
        Command::Print { input } => cmd::print(&input),
        Command::Bench { src, sentences, variants, bound, format, repeats } => {
            cmd::bench(&src, &sentences, &variants, bound, &format, repeats)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.code()
        }
    }
}
