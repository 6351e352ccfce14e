//! Order-preserving map helpers used by corpus-scale operations.
//!
//! With the `parallel` feature (default) [`map_ordered`] fans out over
//! rayon's thread pool; without it the same call runs sequentially. Output
//! order always matches input order, so results are identical either way.
//! [`map_ordered_seq`] is always sequential and exists so benchmarks can
//! compare the two paths directly.

#[cfg(feature = "parallel")]
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
{
    items.iter().map(f).collect()
}

/// Sequential reference path for [`map_ordered`].
pub fn map_ordered_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Fallible [`map_ordered`]. When several items fail, the error of the
/// earliest item (in input order) is returned, independent of scheduling.
pub fn try_map_ordered<T, U, E, F>(items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Send + Sync,
{
    let mut out = Vec::with_capacity(items.len());
    for result in map_ordered(items, f) {
        out.push(result?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<usize> = (0..2000).collect();
        let doubled = map_ordered(&items, |x| x * 2);
        assert_eq!(doubled, map_ordered_seq(&items, |x| x * 2));
    }

    #[test]
    fn first_error_wins() {
        let items: Vec<usize> = (0..100).collect();
        let err = try_map_ordered(&items, |&x| if x >= 10 { Err(x) } else { Ok(x) });
        assert_eq!(err, Err(10));
    }
}
