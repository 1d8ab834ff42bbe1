use crate::error::{Error, Result};
use crate::model::{all_tuples, checked_pow, rank, unrank, RelationalStructure, Tuple};

/// A finitary operation on `0..size`, stored as its full value table.
///
/// `values[i]` is the value at the argument tuple of lexicographic rank `i`
/// (see [`rank`](crate::model::rank)).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OperationTable {
    size: usize,
    arity: usize,
    values: Vec<usize>,
}

/// A witness that an operation does not preserve a relation: applying it to
/// `rows` coordinatewise gives `image`, which is not in `relation`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolymorphismViolation {
    pub relation: String,
    pub rows: Vec<Tuple>,
    pub image: Tuple,
}

impl OperationTable {
    pub fn new(size: usize, arity: usize, values: Vec<usize>) -> Result<Self> {
        if size == 0 || arity == 0 {
            return Err(Error::invalid("operation tables need size >= 1 and arity >= 1"));
        }
        let expected = checked_pow(size, arity)
            .ok_or_else(|| Error::cap("operation table", format!("{size}^{arity}"), usize::MAX))?;
        if values.len() != expected {
            return Err(Error::invalid(format!(
                "table of arity {arity} over {size} elements needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, &v)| v >= size) {
            return Err(Error::OutOfRange {
                location: format!("values[{i}]"),
                value: v,
                size,
            });
        }
        Ok(OperationTable {
            size,
            arity,
            values,
        })
    }

    /// Builds a table by evaluating `f` on every argument tuple.
    pub fn from_fn<F: FnMut(&[usize]) -> usize>(size: usize, arity: usize, mut f: F) -> Self {
        let values = all_tuples(size, arity).map(|t| f(&t)).collect();
        OperationTable::new(size, arity, values).expect("from_fn produced an invalid table")
    }

    /// The `i`-th (0-based) projection of the given arity.
    pub fn projection(size: usize, arity: usize, i: usize) -> Self {
        assert!(i < arity);
        OperationTable::from_fn(size, arity, |x| x[i])
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn eval(&self, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        self.values[rank(args, self.size)]
    }

    /// Overwrites the value at table index `index`.
    pub fn set(&mut self, index: usize, value: usize) {
        assert!(value < self.size);
        self.values[index] = value;
    }

    /// Argument tuple stored at table index `index`.
    pub fn args_at(&self, index: usize) -> Tuple {
        unrank(index, self.size, self.arity)
    }

    pub fn is_idempotent(&self) -> bool {
        (0..self.size).all(|a| self.eval(&vec![a; self.arity]) == a)
    }

    /// Applies the operation coordinatewise to `rows` (one row per argument).
    pub fn apply_rows(&self, rows: &[&[usize]]) -> Tuple {
        assert_eq!(rows.len(), self.arity);
        let n = rows.first().map_or(0, |r| r.len());
        let mut args = vec![0; self.arity];
        (0..n)
            .map(|j| {
                for (slot, row) in args.iter_mut().zip(rows) {
                    *slot = row[j];
                }
                self.eval(&args)
            })
            .collect()
    }

    /// First relation/tuple choice (in name order, then lexicographic order of
    /// row indices) that this operation fails to preserve.
    pub fn polymorphism_violation(&self, a: &RelationalStructure) -> Option<PolymorphismViolation> {
        assert_eq!(self.size, a.size(), "table and structure disagree on the domain");
        for (name, rel) in a.relations() {
            let tuples: Vec<&Tuple> = rel.iter().collect();
            if tuples.is_empty() {
                continue;
            }
            let mut idx = vec![0usize; self.arity];
            loop {
                let rows: Vec<&[usize]> = idx.iter().map(|&i| tuples[i].as_slice()).collect();
                let image = self.apply_rows(&rows);
                if !rel.contains(&image) {
                    return Some(PolymorphismViolation {
                        relation: name.clone(),
                        rows: rows.iter().map(|r| r.to_vec()).collect(),
                        image,
                    });
                }
                if !advance(&mut idx, tuples.len()) {
                    break;
                }
            }
        }
        None
    }

    pub fn is_polymorphism(&self, a: &RelationalStructure) -> bool {
        self.polymorphism_violation(a).is_none()
    }
}

/// Advances an odometer whose digits run over `0..base`; false after the last state.
pub(crate) fn advance(idx: &mut [usize], base: usize) -> bool {
    for digit in idx.iter_mut().rev() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    false
}
