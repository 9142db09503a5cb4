//! Thin dispatch layer between the rayon and sequential builds.
//!
//! Callers express sweeps as map+reduce over an index range; with the
//! `parallel` feature the work runs on the rayon pool, without it the same
//! closures run in a plain loop. Reductions used in this crate (max, sum of
//! counters, histogram merge) are associative, so both paths agree.

/// Map `f` over `0..n` and fold the results with `merge` starting from
/// `identity()`.
#[cfg(feature = "parallel")]
pub fn map_reduce<T, F, M, I>(n: usize, identity: I, f: F, merge: M) -> T
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
    I: Fn() -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map(f)
        .reduce(&identity, &merge)
}

#[cfg(not(feature = "parallel"))]
pub fn map_reduce<T, F, M, I>(n: usize, identity: I, f: F, merge: M) -> T
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
    I: Fn() -> T + Sync + Send,
{
    let mut acc = identity();
    for i in 0..n {
        acc = merge(acc, f(i));
    }
    acc
}

/// Map `f` over `0..n` collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Maximum of `f` over `0..n` (empty range yields `f64::NEG_INFINITY`).
pub fn max_over<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_reduce(n, || f64::NEG_INFINITY, f, f64::max)
}
