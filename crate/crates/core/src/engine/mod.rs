//! Homomorphism-extension search and the subpower layer built on it.
//!
//! Every subpower question is reduced to one constraint network: the
//! `k`-ary polymorphisms of a structure `A` are exactly the homomorphisms
//! `A^k -> A`, so `t` lies in the subpower generated by `k` tuples iff some
//! homomorphism sends the generator columns to the entries of `t`.

mod csp;
pub(crate) mod network;
mod power;
mod subpower;
mod essential;
mod term;

pub use csp::HomInstance;
pub use essential::{is_b_essential, EssentialWitness};
pub use subpower::Subpower;

pub(crate) use essential::is_b_essential_any_arity;
pub(crate) use power::PowerNetwork;

/// Resource caps. Exceeding one is reported as an error, never answered
/// approximately.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest number of vertices of a materialised power structure.
    pub max_power_vertices: usize,
    /// Largest number of constraints in a power-structure network.
    pub max_constraints: usize,
    /// Largest number of tuples a pp-formula evaluation may produce.
    pub max_relation_tuples: usize,
}

pub const DEFAULT_MAX_POWER_VERTICES: usize = 1_000_000;

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_power_vertices: DEFAULT_MAX_POWER_VERTICES,
            max_constraints: 10_000_000,
            max_relation_tuples: 1_000_000,
        }
    }
}

impl Limits {
    /// Defaults, with `ABSORB_MAX_VERTICES` overriding the vertex cap when
    /// it is set to a valid integer.
    pub fn from_env() -> Self {
        let mut limits = Limits::default();
        if let Some(cap) = std::env::var("ABSORB_MAX_VERTICES")
            .ok()
            .and_then(|v| v.trim().parse().ok())
        {
            limits.max_power_vertices = cap;
        }
        limits
    }
}

/// Entry point for all searches: resource caps plus the schedule
/// (parallel or sequential) used for independent sub-searches.
#[derive(Clone, Copy, Debug)]
pub struct Engine {
    limits: Limits,
    parallel: bool,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new(Limits::default())
    }
}

impl Engine {
    /// An engine with the given caps, parallel when the `parallel` feature is
    /// compiled in.
    pub fn new(limits: Limits) -> Self {
        Engine {
            limits,
            parallel: cfg!(feature = "parallel"),
        }
    }

    /// Same caps, always sequential.
    pub fn sequential(self) -> Self {
        Engine {
            parallel: false,
            ..self
        }
    }

    /// Requests a parallel schedule; a no-op without the `parallel` feature.
    pub fn parallel(self) -> Self {
        Engine {
            parallel: cfg!(feature = "parallel"),
            ..self
        }
    }

    pub fn is_parallel(&self) -> bool {
        self.parallel
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }
}
