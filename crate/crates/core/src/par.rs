//! Ordered data-parallel helpers. With the `parallel` feature and a parallel
//! schedule requested, work is spread over the rayon pool; results always come
//! back in input order so reductions stay schedule independent.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn map<T, U, F>(parallel: bool, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Evaluates `f` on every item and returns the results in order, or the
/// earliest (by input position) item for which `f` returned `Err`.
///
/// The sequential path stops at the first failure. The parallel path
/// evaluates everything and then reduces, so both report the same index.
pub(crate) fn map_until_err<T, U, E, F>(parallel: bool, items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        let all: Vec<Result<U, E>> = items.par_iter().map(f).collect();
        return all.into_iter().collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// The first item (by input position) satisfying `pred`, with its index.
pub(crate) fn find_first<T, F>(parallel: bool, items: &[T], pred: F) -> Option<(usize, &T)>
where
    T: Sync,
    F: Fn(&T) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return items.par_iter().enumerate().find_first(|(_, t)| pred(t));
    }
    let _ = parallel;
    items.iter().enumerate().find(|(_, t)| pred(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn earliest_error_wins_in_both_schedules() {
        let items: Vec<u32> = (0..200).collect();
        for parallel in [false, true] {
            let r: Result<Vec<u32>, u32> = map_until_err(parallel, &items, |&x| {
                if x % 37 == 36 {
                    Err(x)
                } else {
                    Ok(x * 2)
                }
            });
            assert_eq!(r, Err(36));
            let ok = map(parallel, &items, |&x| x + 1);
            assert_eq!(ok[199], 200);
        }
    }
}
