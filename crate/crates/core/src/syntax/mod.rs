//! Text formats: signatures, grammars, queries, and printing.

pub mod lexer;
pub mod parser;
pub mod printer;

pub use parser::{
    collect_atoms, load_signature, parse_fs, parse_grammar, parse_query, parse_signature, Diagnostic,
    Grammar, RawClause, RawLiteral,
};
pub use printer::{print_clause, print_fs, print_program, Style};
