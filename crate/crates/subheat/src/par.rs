//! Order-preserving map helpers that run on the rayon pool when the
//! `parallel` feature is enabled and fall back to plain iterators otherwise.
//!
//! Every reduction in this crate goes through these helpers and then folds
//! the collected `Vec` sequentially, so results are bit-identical no matter
//! how many worker threads are available.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `0..n`, preserving index order in the output.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Maps over a slice, preserving element order in the output.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
