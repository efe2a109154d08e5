//! Thin portability layer over rayon.
//!
//! With the `parallel` feature (default) these helpers fan work out over the
//! rayon pool; without it they run sequentially. Callers are written so that
//! results are identical either way: work is cut into fixed batches with
//! per-batch RNG substreams and merged in batch order.

/// True when the crate was built with data-parallel kernels.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

/// Sizes the global worker pool. Returns false when parallelism is
/// compiled out or the pool was already built.
#[cfg(feature = "parallel")]
pub fn set_threads(n: usize) -> bool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .is_ok()
}

#[cfg(not(feature = "parallel"))]
pub fn set_threads(_n: usize) -> bool {
    false
}

#[cfg(feature = "parallel")]
pub fn map_batches<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_batches<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(count: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..count).map(f).collect()
}
