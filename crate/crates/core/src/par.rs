//! Fan-out helpers for the data-parallel inner loops.
//!
//! With the `parallel` feature (on by default) these dispatch through
//! rayon; without it they run sequentially. Both paths preserve input
//! order and perform the same floating-point operations per item, so
//! results are identical in either mode.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Send + Sync,
{
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Sequential reference path; also what `map_collect` lowers to when the
/// `parallel` feature is disabled.
pub(crate) fn map_collect_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
