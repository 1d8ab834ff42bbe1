use std::collections::BTreeSet;
use std::fmt;

use crate::decide::jonsson::{all_quintuples, Certificate, Quintuple};
use crate::model::{RelationalStructure, Subset};

/// First defect found in an NP certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertificateDefect {
    /// Some quintuple lies outside `A^3 x B^2`.
    UnexpectedQuintuple(Quintuple),
    DuplicateQuintuple(Quintuple),
    MissingQuintuple(Quintuple),
    /// More steps than elements: a shortest walk never needs that many.
    TooManySteps { q: Quintuple, steps: usize },
    BadTable { q: Quintuple, step: usize },
    NotPolymorphism { q: Quintuple, step: usize },
    ColourOutsideB { q: Quintuple, step: usize },
    /// The table does not generate the claimed `(b, u, v)`.
    GeneratedMismatch { q: Quintuple, step: usize },
    PathEndpoint { q: Quintuple },
    PathBreak { q: Quintuple, step: usize },
}

impl fmt::Display for CertificateDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use CertificateDefect::*;
        let arr = |q: &Quintuple| q.to_array();
        match self {
            UnexpectedQuintuple(q) => write!(f, "unexpected quintuple {:?}", arr(q)),
            DuplicateQuintuple(q) => write!(f, "duplicate quintuple {:?}", arr(q)),
            MissingQuintuple(q) => write!(f, "missing quintuple {:?}", arr(q)),
            TooManySteps { q, steps } => {
                write!(f, "too many steps ({steps}) for quintuple {:?}", arr(q))
            }
            BadTable { q, step } => {
                write!(f, "step {step} of {:?}: table is not ternary on A", arr(q))
            }
            NotPolymorphism { q, step } => {
                write!(f, "step {step} of {:?}: not a polymorphism", arr(q))
            }
            ColourOutsideB { q, step } => {
                write!(f, "step {step} of {:?}: colour outside B", arr(q))
            }
            GeneratedMismatch { q, step } => write!(
                f,
                "step {step} of {:?}: table does not generate the claimed edge",
                arr(q)
            ),
            PathEndpoint { q } => write!(f, "path endpoint wrong for quintuple {:?}", arr(q)),
            PathBreak { q, step } => write!(f, "path breaks at step {step} of {:?}", arr(q)),
        }
    }
}

/// Checks a Jónsson absorption certificate for `B` in `Pol(a)` in
/// polynomial time: every quintuple appears once, each step's table is an
/// idempotent polymorphism generating its coloured edge, and the edges form
/// a walk from `a` to `c`.
///
/// When `B` is the whole domain absorption is trivial and the empty
/// certificate is accepted.
pub fn verify_np_certificate(
    a: &RelationalStructure,
    b: &Subset,
    cert: &Certificate,
) -> Result<(), CertificateDefect> {
    let size = a.size();
    if b.is_full(size) && cert.quintuples.is_empty() {
        return Ok(());
    }
    let expected: BTreeSet<Quintuple> = all_quintuples(size, b).into_iter().collect();
    let mut seen = BTreeSet::new();
    for proof in &cert.quintuples {
        let q = proof.q;
        if !expected.contains(&q) {
            return Err(CertificateDefect::UnexpectedQuintuple(q));
        }
        if !seen.insert(q) {
            return Err(CertificateDefect::DuplicateQuintuple(q));
        }
    }
    if let Some(q) = expected.difference(&seen).next() {
        return Err(CertificateDefect::MissingQuintuple(*q));
    }
    for proof in &cert.quintuples {
        let q = proof.q;
        if proof.steps.len() > size {
            return Err(CertificateDefect::TooManySteps { q, steps: proof.steps.len() });
        }
        let [colour, first, second] = q.columns();
        for (step, s) in proof.steps.iter().enumerate() {
            if s.phi.arity() != 3 || s.phi.size() != size {
                return Err(CertificateDefect::BadTable { q, step });
            }
            if !s.phi.is_idempotent() || !s.phi.is_polymorphism(a) {
                return Err(CertificateDefect::NotPolymorphism { q, step });
            }
            if !b.contains(s.b) {
                return Err(CertificateDefect::ColourOutsideB { q, step });
            }
            if s.phi.eval(&colour) != s.b || s.phi.eval(&first) != s.u || s.phi.eval(&second) != s.v {
                return Err(CertificateDefect::GeneratedMismatch { q, step });
            }
        }
        let mut at = q.a;
        for (step, s) in proof.steps.iter().enumerate() {
            if s.u != at {
                return Err(CertificateDefect::PathBreak { q, step });
            }
            at = s.v;
        }
        if at != q.c {
            return Err(CertificateDefect::PathEndpoint { q });
        }
    }
    Ok(())
}
