//! Deterministic chunked reductions.
//!
//! Index spaces are cut into fixed-length chunks that do not depend on the
//! number of worker threads. Each chunk is reduced on its own and the chunk
//! results are folded in index order, so a parallel run reproduces the
//! sequential one bit for bit. With the `parallel` feature disabled every
//! helper here runs on the calling thread.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::sum::NeumaierSum;

/// Number of lattice indices handled per work unit.
pub const CHUNK_LEN: u64 = 4096;

fn chunk_range(chunk: u64, len: u64) -> Range<u64> {
    let start = chunk * CHUNK_LEN;
    start..(start + CHUNK_LEN).min(len)
}

/// Applies `f` to every chunk of `0..len` and returns the results in chunk order.
pub fn map_chunks<T, F>(len: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let n_chunks = len.div_ceil(CHUNK_LEN);
    #[cfg(feature = "parallel")]
    {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| f(chunk_range(c, len)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_chunks).map(|c| f(chunk_range(c, len))).collect()
    }
}

/// Compensated sum over `0..len`, where `f` accumulates one chunk.
pub fn sum_chunks<F>(len: u64, f: F) -> f64
where
    F: Fn(Range<u64>, &mut NeumaierSum) + Sync + Send,
{
    let partials = map_chunks(len, |r| {
        let mut acc = NeumaierSum::new();
        f(r, &mut acc);
        acc
    });
    let mut total = NeumaierSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// Order-preserving map over independent items (sweep points, configurations).
pub fn map_items<T, U, F>(items: &[T], f: F) -> Vec<U>
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
