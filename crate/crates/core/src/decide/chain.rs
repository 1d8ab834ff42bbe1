use std::collections::VecDeque;
use std::fmt;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{all_tuples, OperationTable, PolymorphismViolation, Relation, RelationalStructure, Subset};

/// A Jónsson absorption chain `d_0, ..., d_n` of ternary operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainWitness {
    pub tables: Vec<OperationTable>,
}

impl ChainWitness {
    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn to_json_value(&self) -> Value {
        Value::Array(self.tables.iter().map(|t| t.to_json_value()).collect())
    }
}

/// First reason a sequence of operations fails to be a Jónsson chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChainViolation {
    Empty,
    NotTernary { index: usize },
    WrongSize { index: usize },
    FirstNotProjection { args: [usize; 3] },
    LastNotProjection { args: [usize; 3] },
    /// `d_i(x,y,y) != d_{i+1}(x,x,y)`.
    Link { index: usize, x: usize, y: usize },
    NotIdempotent { index: usize, a: usize },
    NotPolymorphism { index: usize, violation: PolymorphismViolation },
    /// `d_i(b1, a, b2)` leaves `B`.
    NotAbsorbing { index: usize, args: [usize; 3] },
}

impl fmt::Display for ChainViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainViolation::Empty => write!(f, "empty chain"),
            ChainViolation::NotTernary { index } => write!(f, "d_{index} is not ternary"),
            ChainViolation::WrongSize { index } => write!(f, "d_{index} has the wrong domain size"),
            ChainViolation::FirstNotProjection { args } => {
                write!(f, "d_0 is not the first projection at {args:?}")
            }
            ChainViolation::LastNotProjection { args } => {
                write!(f, "last operation is not the third projection at {args:?}")
            }
            ChainViolation::Link { index, x, y } => write!(
                f,
                "link fails: d_{index}({x},{y},{y}) != d_{}({x},{x},{y})",
                index + 1
            ),
            ChainViolation::NotIdempotent { index, a } => {
                write!(f, "d_{index} is not idempotent at {a}")
            }
            ChainViolation::NotPolymorphism { index, violation } => write!(
                f,
                "d_{index} is not a polymorphism: rows {:?} of {} map to {:?}",
                violation.rows, violation.relation, violation.image
            ),
            ChainViolation::NotAbsorbing { index, args } => {
                write!(f, "d_{index}{args:?} leaves B")
            }
        }
    }
}

fn is_idempotent_polymorphism(t: &OperationTable, a: &RelationalStructure) -> bool {
    t.size() == a.size() && t.is_idempotent() && t.is_polymorphism(a)
}

/// Whether `t` is an idempotent polymorphism of `a` with
/// `t(x_1, ..., x_n) in B` whenever at most one `x_i` lies outside `B`.
///
/// Idempotence plus preservation of `a` is the same as preserving the
/// singleton expansion of `a`.
pub fn is_absorption_term(a: &RelationalStructure, b: &Subset, t: &OperationTable) -> bool {
    if !is_idempotent_polymorphism(t, a) {
        return false;
    }
    let n = t.arity();
    all_tuples(a.size(), n).all(|args| {
        args.iter().filter(|x| !b.contains(**x)).count() > 1 || b.contains(t.eval(&args))
    })
}

/// Checks that `chain` is a Jónsson absorption chain for `B` in `Pol(a)`,
/// reporting the first violation: endpoints, then links, then
/// polymorphism, then absorption.
pub fn is_jonsson_chain(
    a: &RelationalStructure,
    b: &Subset,
    chain: &[OperationTable],
) -> Result<(), ChainViolation> {
    let size = a.size();
    let (first, last) = match chain {
        [] => return Err(ChainViolation::Empty),
        [first, .., last] => (first, last),
        [only] => (only, only),
    };
    for (index, d) in chain.iter().enumerate() {
        if d.arity() != 3 {
            return Err(ChainViolation::NotTernary { index });
        }
        if d.size() != size {
            return Err(ChainViolation::WrongSize { index });
        }
    }
    for args in all_tuples(size, 3) {
        if first.eval(&args) != args[0] {
            return Err(ChainViolation::FirstNotProjection { args: [args[0], args[1], args[2]] });
        }
    }
    for args in all_tuples(size, 3) {
        if last.eval(&args) != args[2] {
            return Err(ChainViolation::LastNotProjection { args: [args[0], args[1], args[2]] });
        }
    }
    for (index, pair) in chain.windows(2).enumerate() {
        for x in 0..size {
            for y in 0..size {
                if pair[0].eval(&[x, y, y]) != pair[1].eval(&[x, x, y]) {
                    return Err(ChainViolation::Link { index, x, y });
                }
            }
        }
    }
    for (index, d) in chain.iter().enumerate() {
        if let Some(a) = (0..size).find(|&x| d.eval(&[x, x, x]) != x) {
            return Err(ChainViolation::NotIdempotent { index, a });
        }
        if let Some(violation) = d.polymorphism_violation(a) {
            return Err(ChainViolation::NotPolymorphism { index, violation });
        }
    }
    for (index, d) in chain.iter().enumerate() {
        for b1 in b.iter() {
            for x in 0..size {
                for b2 in b.iter() {
                    if !b.contains(d.eval(&[b1, x, b2])) {
                        return Err(ChainViolation::NotAbsorbing { index, args: [b1, x, b2] });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Converts an `n`-ary absorption term `t` into a Jónsson chain of length
/// `n + 2`: the first projection, then
/// `d_i(x, y, z) = t(z, ..., z, y, x, ..., x)` with `y` in position `i`
/// (`i = 1..n`), then the third projection.
pub fn chain_from_absorption_term(t: &OperationTable) -> ChainWitness {
    let size = t.size();
    let n = t.arity();
    let mut tables = vec![OperationTable::projection(size, 3, 0)];
    for i in 1..=n {
        tables.push(OperationTable::from_fn(size, 3, |xyz| {
            let args: Vec<usize> = (1..=n)
                .map(|j| match j.cmp(&i) {
                    std::cmp::Ordering::Less => xyz[2],
                    std::cmp::Ordering::Equal => xyz[1],
                    std::cmp::Ordering::Greater => xyz[0],
                })
                .collect();
            t.eval(&args)
        }));
    }
    tables.push(OperationTable::projection(size, 3, 2));
    ChainWitness { tables }
}

/// Largest domain the exhaustive chain search accepts.
pub const ORACLE_MAX_SIZE: usize = 2;

/// Exhaustive search for a shortest Jónsson chain: every ternary idempotent
/// polymorphism absorbing `B` is a node, `d -> d'` when
/// `d(x,y,y) = d'(x,x,y)`, and we look for a path from the first to the
/// third projection.
pub fn oracle_chain_search(a: &RelationalStructure, b: &Subset) -> Result<Option<ChainWitness>> {
    oracle_relative_chain_search(a, &Relation::unary(b), &Relation::full(a.size(), 1))
}

/// As [`oracle_chain_search`], with the absorption condition
/// `d(S, R, S) ⊆ S` for relations `S ⊆ R` of equal arity, applied
/// coordinatewise.
pub fn oracle_relative_chain_search(
    a: &RelationalStructure,
    s: &Relation,
    r: &Relation,
) -> Result<Option<ChainWitness>> {
    let size = a.size();
    if size > ORACLE_MAX_SIZE {
        return Err(Error::DomainTooLarge(format!(
            "exhaustive chain search handles at most {ORACLE_MAX_SIZE} elements, got {size}"
        )));
    }
    if s.arity() != r.arity() || !s.is_subset(r) {
        return Err(Error::invalid("S must be a subset of R of the same arity"));
    }
    let cells = size * size * size;
    let absorbs = |d: &OperationTable| {
        s.iter().all(|s1| {
            r.iter().all(|x| {
                s.iter().all(|s2| {
                    let image: Vec<usize> =
                        (0..s1.len()).map(|j| d.eval(&[s1[j], x[j], s2[j]])).collect();
                    s.contains(&image)
                })
            })
        })
    };
    let nodes: Vec<OperationTable> = all_tuples(size, cells)
        .filter_map(|values| OperationTable::new(size, 3, values).ok())
        .filter(|d| is_idempotent_polymorphism(d, a) && absorbs(d))
        .collect();
    let start = OperationTable::projection(size, 3, 0);
    let goal = OperationTable::projection(size, 3, 2);
    let Some(start) = nodes.iter().position(|d| *d == start) else {
        return Ok(None);
    };
    let linked = |d: &OperationTable, e: &OperationTable| {
        (0..size).all(|x| (0..size).all(|y| d.eval(&[x, y, y]) == e.eval(&[x, x, y])))
    };
    let mut parent: Vec<Option<usize>> = vec![None; nodes.len()];
    let mut seen = vec![false; nodes.len()];
    let mut queue = VecDeque::from([start]);
    // The start node is only marked as reached through an edge, so a chain
    // always has at least two members.
    while let Some(i) = queue.pop_front() {
        for (j, e) in nodes.iter().enumerate() {
            if !seen[j] && linked(&nodes[i], e) {
                seen[j] = true;
                parent[j] = Some(i);
                if *e == goal {
                    let mut path = vec![j];
                    let mut cur = i;
                    loop {
                        path.push(cur);
                        if cur == start && path.len() >= 2 {
                            break;
                        }
                        cur = parent[cur].expect("path leads back to start");
                    }
                    path.reverse();
                    return Ok(Some(ChainWitness {
                        tables: path.into_iter().map(|k| nodes[k].clone()).collect(),
                    }));
                }
                queue.push_back(j);
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(arity: usize, ts: &[&[usize]]) -> Relation {
        Relation::from_tuples(arity, ts.iter().map(|t| t.to_vec())).unwrap()
    }

    fn ord2() -> RelationalStructure {
        RelationalStructure::new(2)
            .unwrap()
            .with("leq", rel(2, &[&[0, 0], &[0, 1], &[1, 1]]))
            .unwrap()
    }

    fn min_table() -> OperationTable {
        OperationTable::from_fn(2, 2, |a| a[0].min(a[1]))
    }

    #[test]
    fn chain_from_min() {
        let chain = chain_from_absorption_term(&min_table());
        assert_eq!(chain.len(), 4);
        let expected = [
            OperationTable::from_fn(2, 3, |a| a[0]),
            OperationTable::from_fn(2, 3, |a| a[1].min(a[0])),
            OperationTable::from_fn(2, 3, |a| a[2].min(a[1])),
            OperationTable::from_fn(2, 3, |a| a[2]),
        ];
        assert_eq!(chain.tables, expected);
        assert_eq!(is_jonsson_chain(&ord2(), &Subset::singleton(0), &chain.tables), Ok(()));
    }

    #[test]
    fn majority_gives_five_term_chain() {
        let maj = OperationTable::from_fn(2, 3, |a| {
            if a[0] == a[1] || a[0] == a[2] {
                a[0]
            } else {
                a[1]
            }
        });
        let b = Subset::singleton(0);
        assert!(is_absorption_term(&ord2(), &b, &maj));
        let chain = chain_from_absorption_term(&maj);
        assert_eq!(chain.len(), 5);
        assert_eq!(is_jonsson_chain(&ord2(), &b, &chain.tables), Ok(()));
    }

    #[test]
    fn two_projection_chain_breaks_link() {
        let chain = [OperationTable::projection(2, 3, 0), OperationTable::projection(2, 3, 2)];
        assert_eq!(
            is_jonsson_chain(&ord2(), &Subset::singleton(0), &chain),
            Err(ChainViolation::Link { index: 0, x: 0, y: 1 })
        );
    }

    #[test]
    fn absorption_term_checks() {
        let b = Subset::singleton(0);
        assert!(is_absorption_term(&ord2(), &b, &min_table()));
        let max = OperationTable::from_fn(2, 2, |a| a[0].max(a[1]));
        assert!(!is_absorption_term(&ord2(), &b, &max));
        let p = OperationTable::projection(2, 2, 0);
        assert!(!is_absorption_term(&ord2(), &b, &p));
        assert!(is_absorption_term(&ord2(), &Subset::full(2), &p));
    }

    #[test]
    fn oracle_on_small_structures() {
        let triv = RelationalStructure::new(1).unwrap();
        let chain = oracle_chain_search(&triv, &Subset::singleton(0)).unwrap().unwrap();
        assert_eq!(chain.len(), 2);

        let found = oracle_chain_search(&ord2(), &Subset::singleton(0)).unwrap().unwrap();
        assert_eq!(is_jonsson_chain(&ord2(), &Subset::singleton(0), &found.tables), Ok(()));
        assert!(found.len() <= 4);

        let aff = RelationalStructure::new(2)
            .unwrap()
            .with("aff", rel(3, &[&[0, 0, 0], &[0, 1, 1], &[1, 0, 1], &[1, 1, 0]]))
            .unwrap();
        assert_eq!(oracle_chain_search(&aff, &Subset::singleton(0)).unwrap(), None);

        let three = RelationalStructure::new(3).unwrap();
        assert!(matches!(
            oracle_chain_search(&three, &Subset::singleton(0)),
            Err(Error::DomainTooLarge(_))
        ));
    }
}
