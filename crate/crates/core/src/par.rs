//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) the helpers fan out over rayon's
//! global pool; without it, or after [`set_sequential`]`(true)`, they run as
//! plain iterators. Both paths produce results in index order, and every
//! reduction in the crate sums those ordered results sequentially, so the two
//! modes are bit-identical.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force the sequential path at runtime (used by the benches).
pub fn set_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Fill `out` in chunks of `chunk` elements, `f(chunk_index, chunk_slice)`.
pub fn for_each_chunk<T, F>(out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    assert!(chunk > 0);
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            use rayon::prelude::*;
            out.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
    }
    out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}
