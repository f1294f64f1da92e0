//! Typed feature structure grammars: unification, definite-clause
//! interpreters, off-line constraint propagation, and lexicon compilation.

pub mod bench;
pub mod compiled;
pub mod corpus;
pub mod covariation;
pub mod error;
pub mod fs;
pub mod index;
pub mod ops;
pub mod program;
pub mod propagate;
pub mod signature;
pub mod solve;
pub mod source;
pub mod store;
pub mod syntax;

pub use error::{PathError, SignatureError, UnifyFailure};
pub use fs::{FeatureStructure, Node, NodeId, Path};
pub use program::{Clause, ClauseId, Goal, Literal, PredId, Program};
pub use signature::{FeatId, Signature, TypeId, TOP};
