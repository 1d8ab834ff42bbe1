//! Decision procedures for (Jónsson) absorption.
//!
//! [`Engine::decide_jonsson`](crate::Engine::decide_jonsson) applies the local
//! characterisation: `B` Jónsson absorbs `Pol(A)` iff for every
//! `a, c, d in A` and `b1, b2 in B` the digraph of `B`-coloured edges of
//! `<(b1,a,a), (b2,c,c), (d,a,c)>` has a walk from `a` to `c`. For finitely
//! related algebras Jónsson absorption and absorption coincide, so
//! [`Engine::decide_absorption`](crate::Engine::decide_absorption) shares the
//! same code path.

mod bounds;
mod certificate;
mod chain;
mod jonsson;

pub use bounds::{bounds, BoundReport};
pub use certificate::{verify_np_certificate, CertificateDefect};
pub use chain::{
    chain_from_absorption_term, is_absorption_term, is_jonsson_chain, oracle_chain_search,
    oracle_relative_chain_search, ChainViolation, ChainWitness, ORACLE_MAX_SIZE,
};
pub use jonsson::{Certificate, Decision, Mode, Quintuple, QuintupleProof, Step};
