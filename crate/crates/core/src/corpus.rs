//! Bundled demo grammars.

/// Auxiliary flip with two lexical rules (one complement-extraction
/// style, one finitization).
pub mod aux {
    pub const SIGNATURE: &str = include_str!("../grammars/aux.sig");
    pub const GRAMMAR: &str = include_str!("../grammars/aux.hpsg");
    pub const SENTENCES: &str = include_str!("../grammars/aux.sentences");
}

/// Specifier and adjunct schemata, used to show clause pruning.
pub mod schema {
    pub const SIGNATURE: &str = include_str!("../grammars/schema.sig");
    pub const GRAMMAR: &str = include_str!("../grammars/schema.hpsg");
}

/// Non-empty, non-comment lines.
pub fn sentences(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'))
}
