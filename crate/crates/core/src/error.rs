use thiserror::Error;

use crate::fs::Path;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SignatureError {
    #[error("cycle in subtype relation among {}", types.join(", "))]
    Cycle { types: Vec<String> },
    #[error("non-unique GLB for ({a},{b}): maximal common subtypes {}", candidates.join(", "))]
    NonUniqueGlb { a: String, b: String, candidates: Vec<String> },
    #[error("non-unique LUB for ({a},{b}): minimal common supertypes {}", candidates.join(", "))]
    NonUniqueLub { a: String, b: String, candidates: Vec<String> },
    #[error("feature {feature} introduced at incomparable types {a} and {b}")]
    FeatureIntroduction { feature: String, a: String, b: String },
    #[error("bad restriction for {feature} at {at}: {detail}")]
    Restriction { feature: String, at: String, detail: String },
    #[error("{line}:{col}: unknown type {name} ({context})")]
    UnknownType { name: String, context: String, line: usize, col: usize },
    #[error("top cannot have a supertype (declared under {parent})")]
    TopHasSupertype { parent: String },
    #[error("the atom type must not carry features")]
    AtomWithFeatures,
    #[error("atoms used but the signature declares no `atom` type")]
    NoAtomType,
}

/// Why a unification failed.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum UnifyFailure {
    #[error("type clash at {path}: {left} vs {right}")]
    Clash { path: Path, left: String, right: String },
    #[error("cyclic result")]
    Cyclic,
    #[error("structures have different numbers of roots ({0} vs {1})")]
    Arity(usize, usize),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("feature {feature} is not appropriate for type {ty} at {path}")]
    Inappropriate { feature: String, ty: String, path: Path },
    #[error("type {ty} conflicts with {existing} at {path}")]
    Clash { ty: String, existing: String, path: Path },
    #[error("unknown feature {0}")]
    UnknownFeature(String),
}
