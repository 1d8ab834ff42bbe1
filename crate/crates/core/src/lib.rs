//! Absorption and Jónsson absorption for polymorphism algebras of finite
//! relational structures.
//!
//! The crate is split into four layers:
//!
//! * [`model`]: structures, relations, subsets, operation tables, digraphs and
//!   their JSON codecs;
//! * [`engine`]: a homomorphism-extension CSP solver and the subpower layer
//!   built on it (membership, generation, B-essential witnesses, absorption
//!   term search);
//! * [`decide`]: the local Jónsson absorption test, chain and term checkers,
//!   the brute-force chain oracle, NP certificates and arity bounds;
//! * [`ppform`]: primitive-positive formulas, their evaluation and the
//!   formula surgery / comb machinery.
//!
//! [`corpus`] enumerates small structures for sweeps and fixtures.

pub mod corpus;
pub mod decide;
pub mod engine;
mod error;
pub mod model;
mod par;
pub mod ppform;

pub use error::{Error, Result};
pub use engine::{Engine, Limits};
pub use model::{Digraph, OperationTable, Relation, RelationalStructure, Subset, Tuple};
