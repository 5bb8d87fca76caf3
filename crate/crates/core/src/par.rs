//! Data-parallel helpers with a sequential fallback.
//!
//! With the default `parallel` feature these fan work out over rayon; without
//! it they compile to plain loops with identical results. Outputs are always
//! collected in input order, and callers perform floating-point *reductions*
//! sequentially over the ordered results, so artifacts are byte-identical
//! regardless of feature flags or `--jobs`.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sizes the global worker pool (used by the CLI's `--jobs`). Returns false if
/// a pool was already installed, in which case the existing size is kept.
/// A no-op without the `parallel` feature.
#[allow(unused_variables)]
pub fn init_thread_pool(jobs: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        true
    }
}

/// Maps `f` over `items`, in parallel when available; output order matches
/// input order.
pub fn map_slice<T: Sync, U: Send, F: Fn(&T) -> U + Sync + Send>(items: &[T], f: F) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Maps `f` over `0..n`, in parallel when available; output index i holds f(i).
pub fn map_indices<U: Send, F: Fn(usize) -> U + Sync + Send>(n: usize, f: F) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential twin of [`map_slice`], compiled unconditionally. Exists so
/// benchmarks can compare the two code paths within one build.
pub fn map_slice_seq<T, U, F: Fn(&T) -> U>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Sequential twin of [`map_indices`].
pub fn map_indices_seq<U, F: Fn(usize) -> U>(n: usize, f: F) -> Vec<U> {
    (0..n).map(f).collect()
}
