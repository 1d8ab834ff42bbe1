use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{all_tuples, Subset, Tuple};

/// Name prefix reserved for the singleton relations added by
/// [`RelationalStructure::with_singletons`].
pub const SINGLETON_PREFIX: &str = "_s";

/// A finitary relation given by its tuple set. Tuples are kept sorted and
/// duplicate free.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    arity: usize,
    tuples: BTreeSet<Tuple>,
}

impl Relation {
    pub fn empty(arity: usize) -> Self {
        Relation {
            arity,
            tuples: BTreeSet::new(),
        }
    }

    pub fn from_tuples<I>(arity: usize, tuples: I) -> Result<Self>
    where
        I: IntoIterator<Item = Tuple>,
    {
        let mut rel = Relation::empty(arity);
        for (i, t) in tuples.into_iter().enumerate() {
            if t.len() != arity {
                return Err(Error::ArityMismatch {
                    location: format!("tuple {i}"),
                    expected: arity,
                    found: t.len(),
                });
            }
            rel.tuples.insert(t);
        }
        Ok(rel)
    }

    /// All of `A^arity`.
    pub fn full(size: usize, arity: usize) -> Self {
        Relation {
            arity,
            tuples: all_tuples(size, arity).collect(),
        }
    }

    /// The diagonal `{(a, a, ..., a)}` of the given arity.
    pub fn diagonal(size: usize, arity: usize) -> Self {
        Relation {
            arity,
            tuples: (0..size).map(|a| vec![a; arity]).collect(),
        }
    }

    /// Unary relation holding exactly the elements of `subset`.
    pub fn unary(subset: &Subset) -> Self {
        Relation {
            arity: 1,
            tuples: subset.iter().map(|a| vec![a]).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[usize]) -> bool {
        self.tuples.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tuple> + '_ {
        self.tuples.iter()
    }

    pub fn tuples(&self) -> &BTreeSet<Tuple> {
        &self.tuples
    }

    /// Inserts a tuple, panicking on an arity mismatch.
    pub fn insert(&mut self, t: Tuple) -> bool {
        assert_eq!(t.len(), self.arity, "tuple arity mismatch");
        self.tuples.insert(t)
    }

    pub fn max_entry(&self) -> Option<usize> {
        self.tuples.iter().flat_map(|t| t.iter().copied()).max()
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.arity == other.arity && self.tuples.is_subset(&other.tuples)
    }

    pub fn union(&self, other: &Relation) -> Result<Relation> {
        if self.arity != other.arity {
            return Err(Error::ArityMismatch {
                location: "union".into(),
                expected: self.arity,
                found: other.arity,
            });
        }
        Ok(Relation {
            arity: self.arity,
            tuples: self.tuples.union(&other.tuples).cloned().collect(),
        })
    }

    /// Deletes coordinate `drop` (0-based) from every tuple.
    pub fn project_out(&self, drop: usize) -> Result<Relation> {
        if self.arity < 2 {
            return Err(Error::invalid("cannot project a relation of arity < 2"));
        }
        if drop >= self.arity {
            return Err(Error::invalid(format!(
                "coordinate {drop} out of range for arity {}",
                self.arity
            )));
        }
        let keep: Vec<usize> = (0..self.arity).filter(|&i| i != drop).collect();
        Ok(self.project_onto(&keep))
    }

    /// Projection onto the listed coordinates, in the listed order.
    /// Coordinates may repeat. Panics on an out-of-range coordinate.
    pub fn project_onto(&self, coords: &[usize]) -> Relation {
        assert!(coords.iter().all(|&c| c < self.arity), "coordinate out of range");
        Relation {
            arity: coords.len(),
            tuples: self
                .tuples
                .iter()
                .map(|t| coords.iter().map(|&c| t[c]).collect())
                .collect(),
        }
    }

    /// Tuples whose coordinate `i` lies in `allowed[i]` (when present).
    pub fn restrict(&self, allowed: &[Option<&Subset>]) -> Relation {
        assert_eq!(allowed.len(), self.arity);
        Relation {
            arity: self.arity,
            tuples: self
                .tuples
                .iter()
                .filter(|t| {
                    t.iter()
                        .zip(allowed)
                        .all(|(x, s)| s.is_none_or(|s| s.contains(*x)))
                })
                .cloned()
                .collect(),
        }
    }

    /// Whether some tuple lies entirely inside `subset`.
    pub fn meets_power(&self, subset: &Subset) -> bool {
        self.tuples
            .iter()
            .any(|t| t.iter().all(|&x| subset.contains(x)))
    }

    pub(crate) fn check_bounds(&self, size: usize, name: &str) -> Result<()> {
        for (i, t) in self.tuples.iter().enumerate() {
            if t.len() != self.arity {
                return Err(Error::ArityMismatch {
                    location: format!("relation '{name}' tuple {i}"),
                    expected: self.arity,
                    found: t.len(),
                });
            }
            if let Some((j, &v)) = t.iter().enumerate().find(|(_, &v)| v >= size) {
                return Err(Error::OutOfRange {
                    location: format!("relation '{name}' tuple {i} entry {j}"),
                    value: v,
                    size,
                });
            }
        }
        Ok(())
    }
}

impl FromIterator<Tuple> for Relation {
    /// Collects tuples into a relation; the arity is taken from the first
    /// tuple (0 for an empty iterator). Panics on mixed arities.
    fn from_iter<I: IntoIterator<Item = Tuple>>(iter: I) -> Self {
        let tuples: BTreeSet<Tuple> = iter.into_iter().collect();
        let arity = tuples.iter().next().map_or(0, Vec::len);
        assert!(tuples.iter().all(|t| t.len() == arity), "mixed arities");
        Relation { arity, tuples }
    }
}

/// A finite relational structure on the domain `0..size`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationalStructure {
    size: usize,
    relations: BTreeMap<String, Relation>,
}

impl RelationalStructure {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("domain size must be positive"));
        }
        Ok(RelationalStructure {
            size,
            relations: BTreeMap::new(),
        })
    }

    /// Adds or replaces a relation after checking its entries.
    pub fn insert(&mut self, name: impl Into<String>, rel: Relation) -> Result<()> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::invalid("relation name must not be empty"));
        }
        if rel.arity() == 0 {
            return Err(Error::invalid(format!("relation '{name}' has arity 0")));
        }
        rel.check_bounds(self.size, &name)?;
        self.relations.insert(name, rel);
        Ok(())
    }

    /// Builder-style [`insert`](Self::insert).
    pub fn with(mut self, name: impl Into<String>, rel: Relation) -> Result<Self> {
        self.insert(name, rel)?;
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn relations(&self) -> &BTreeMap<String, Relation> {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    /// Arity bound used by the bound formulas: `max(2, max relation arity)`.
    pub fn theta(&self) -> usize {
        self.relations
            .values()
            .map(Relation::arity)
            .max()
            .unwrap_or(0)
            .max(2)
    }

    /// Whether some relation (under any name) equals `{(a)}`.
    pub fn has_singleton(&self, a: usize) -> bool {
        self.relations
            .values()
            .any(|r| r.arity() == 1 && r.len() == 1 && r.contains(&[a]))
    }

    /// Adds a unary relation `_s<a> = {(a)}` for every element whose singleton
    /// is not already present (under any name). The flag reports whether
    /// anything was added.
    pub fn with_singletons(&self) -> Result<(RelationalStructure, bool)> {
        let mut out = self.clone();
        let mut added = false;
        for a in 0..self.size {
            if self.has_singleton(a) {
                continue;
            }
            let name = format!("{SINGLETON_PREFIX}{a}");
            if self.relations.contains_key(&name) {
                return Err(Error::invalid(format!(
                    "relation name '{name}' collides with the reserved singleton prefix"
                )));
            }
            out.relations
                .insert(name, Relation::unary(&Subset::singleton(a)));
            added = true;
        }
        Ok((out, added))
    }

    /// [`with_singletons`](Self::with_singletons) without the flag.
    pub fn expanded(&self) -> Result<RelationalStructure> {
        self.with_singletons().map(|(s, _)| s)
    }

    /// A relation name not yet in use, of the form `<prefix><n>`.
    pub fn fresh_name(&self, prefix: &str) -> String {
        (0..)
            .map(|i| format!("{prefix}{i}"))
            .find(|n| !self.relations.contains_key(n))
            .expect("unbounded name supply")
    }

    pub(crate) fn check_subset(&self, b: &Subset) -> Result<()> {
        if let Some(x) = b.iter().find(|&x| x >= self.size) {
            return Err(Error::OutOfRange {
                location: "subset".into(),
                value: x,
                size: self.size,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(arity: usize, ts: &[&[usize]]) -> Relation {
        Relation::from_tuples(arity, ts.iter().map(|t| t.to_vec())).unwrap()
    }

    fn leq() -> Relation {
        rel(2, &[&[0, 0], &[0, 1], &[1, 1]])
    }

    #[test]
    fn singletons_added_once() {
        let a = RelationalStructure::new(2).unwrap().with("leq", leq()).unwrap();
        let (x, added) = a.with_singletons().unwrap();
        assert!(added);
        assert_eq!(x.relation("_s0").unwrap(), &rel(1, &[&[0]]));
        assert_eq!(x.relation("_s1").unwrap(), &rel(1, &[&[1]]));
        let (y, again) = x.with_singletons().unwrap();
        assert!(!again);
        assert_eq!(x, y);
    }

    #[test]
    fn named_singletons_are_recognised_by_content() {
        let ord2 = RelationalStructure::new(2)
            .unwrap()
            .with("leq", leq())
            .unwrap()
            .with("s0", rel(1, &[&[0]]))
            .unwrap()
            .with("s1", rel(1, &[&[1]]))
            .unwrap();
        let (x, added) = ord2.with_singletons().unwrap();
        assert!(!added);
        assert_eq!(x, ord2);
    }

    #[test]
    fn trivial_structure_gets_its_singleton() {
        let t = RelationalStructure::new(1).unwrap();
        let (x, added) = t.with_singletons().unwrap();
        assert!(added);
        assert_eq!(x.relations().len(), 1);
        assert!(x.relation("_s0").is_some());
    }

    #[test]
    fn reserved_name_collision_is_an_error() {
        let a = RelationalStructure::new(2)
            .unwrap()
            .with("_s0", rel(2, &[&[0, 1]]))
            .unwrap();
        assert!(a.with_singletons().is_err());
    }

    #[test]
    fn projection_examples() {
        let aff = rel(3, &[&[0, 0, 0], &[0, 1, 1], &[1, 0, 1], &[1, 1, 0]]);
        assert_eq!(aff.project_out(2).unwrap(), Relation::full(2, 2));
        let neq = rel(2, &[&[0, 1], &[1, 0]]);
        assert_eq!(neq.project_out(0).unwrap(), rel(1, &[&[0], &[1]]));
        assert!(Relation::empty(2).project_out(0).unwrap().is_empty());
        assert!(rel(1, &[&[0]]).project_out(0).is_err());
        assert!(neq.project_out(2).is_err());
    }

    #[test]
    fn out_of_range_tuple_rejected() {
        let a = RelationalStructure::new(2).unwrap();
        let err = a.with("r", rel(2, &[&[0, 2]])).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { value: 2, .. }));
    }

    #[test]
    fn theta_is_at_least_two() {
        assert_eq!(RelationalStructure::new(3).unwrap().theta(), 2);
        let a = RelationalStructure::new(2)
            .unwrap()
            .with("aff", Relation::full(2, 3))
            .unwrap();
        assert_eq!(a.theta(), 3);
    }
}
