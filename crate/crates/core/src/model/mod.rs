//! Core data model: structures, relations, subsets, operation tables and
//! digraphs, plus their canonical JSON codecs.
//!
//! Domain elements are the integers `0..size`. Tuples are plain `Vec<usize>`.

mod codec;
mod digraph;
mod structure;
mod subset;
pub(crate) mod table;

pub(crate) use codec::{codec_value, parse_doc, from_value};
pub use digraph::Digraph;
pub use structure::{Relation, RelationalStructure, SINGLETON_PREFIX};
pub use subset::Subset;
pub use table::{OperationTable, PolymorphismViolation};

pub type Tuple = Vec<usize>;

/// Lexicographic rank of `tuple` among all tuples over `0..size` of the same
/// length: `sum tuple[i] * size^(k-1-i)`.
pub fn rank(tuple: &[usize], size: usize) -> usize {
    tuple.iter().fold(0, |acc, &x| acc * size + x)
}

/// Inverse of [`rank`].
pub fn unrank(mut index: usize, size: usize, len: usize) -> Tuple {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % size;
        index /= size;
    }
    out
}

/// Iterator over all tuples in `0..size` of length `len`, in lexicographic order.
pub fn all_tuples(size: usize, len: usize) -> impl Iterator<Item = Tuple> {
    let count = checked_pow(size, len).unwrap_or(usize::MAX);
    (0..count).map(move |i| unrank(i, size, len))
}

/// `base^exp`, or `None` on overflow.
pub fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let exp = u32::try_from(exp).ok()?;
    base.checked_pow(exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_matches_table_index_convention() {
        assert_eq!(rank(&[1, 0, 1], 2), 5);
        assert_eq!(unrank(5, 2, 3), vec![1, 0, 1]);
        assert_eq!(rank(&[2, 1], 3), 7);
        let all: Vec<_> = all_tuples(2, 2).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(all_tuples(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
    }
}
