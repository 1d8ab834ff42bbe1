use std::collections::BTreeSet;

/// A set of domain elements, kept sorted and duplicate free.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset {
    elements: BTreeSet<usize>,
}

impl Subset {
    pub fn new<I: IntoIterator<Item = usize>>(elements: I) -> Self {
        Subset {
            elements: elements.into_iter().collect(),
        }
    }

    pub fn singleton(a: usize) -> Self {
        Subset::new([a])
    }

    /// The whole domain `0..size`.
    pub fn full(size: usize) -> Self {
        Subset::new(0..size)
    }

    pub fn contains(&self, a: usize) -> bool {
        self.elements.contains(&a)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.elements.iter().copied()
    }

    pub fn first(&self) -> Option<usize> {
        self.elements.first().copied()
    }

    pub fn insert(&mut self, a: usize) -> bool {
        self.elements.insert(a)
    }

    pub fn complement(&self, size: usize) -> Subset {
        Subset::new((0..size).filter(|a| !self.contains(*a)))
    }

    pub fn intersection(&self, other: &Subset) -> Subset {
        Subset::new(self.elements.intersection(&other.elements).copied())
    }

    pub fn is_disjoint(&self, other: &Subset) -> bool {
        self.elements.is_disjoint(&other.elements)
    }

    pub fn is_subset(&self, other: &Subset) -> bool {
        self.elements.is_subset(&other.elements)
    }

    pub fn is_full(&self, size: usize) -> bool {
        self.len() == size && self.iter().all(|a| a < size)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Bit mask representation; every element must be below 64.
    pub(crate) fn mask(&self) -> u64 {
        self.iter().fold(0u64, |m, a| {
            debug_assert!(a < 64);
            m | (1u64 << a)
        })
    }

    pub(crate) fn from_mask(mask: u64) -> Subset {
        Subset::new((0..64).filter(|a| mask >> a & 1 == 1))
    }
}

impl FromIterator<usize> for Subset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Subset::new(iter)
    }
}
