//! Execution policy for the data-parallel loops (sweeps over ordinates,
//! stencil assembly, matrix-vector rows, batch kernel evaluation).
//!
//! With the `parallel` feature disabled, [`Execution::Parallel`] silently
//! runs sequentially. Every reduction that feeds a result is performed in a
//! fixed order, so both policies produce bit-identical output.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Number of workers a chunked reduction should plan for.
    pub fn workers(self) -> usize {
        match self {
            Execution::Sequential => 1,
            Execution::Parallel => worker_count(),
        }
    }

    /// Maps `f` over `0..n`, returning results in index order.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            Execution::Parallel => par_map_range(n, f),
        }
    }

    /// Applies `f` to every chunk of `out` (chunk index, chunk slice).
    pub fn for_each_chunk_mut<T, F>(self, out: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        match self {
            Execution::Sequential => out.chunks_mut(chunk).enumerate().for_each(|(k, c)| f(k, c)),
            Execution::Parallel => par_chunks(out, chunk, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn worker_count() -> usize {
    rayon::current_num_threads()
}

#[cfg(not(feature = "parallel"))]
fn worker_count() -> usize {
    1
}

#[cfg(feature = "parallel")]
fn par_map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
fn par_chunks<T, F>(out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    use rayon::prelude::*;
    out.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(k, c)| f(k, c));
}

#[cfg(not(feature = "parallel"))]
fn par_chunks<T, F>(out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    out.chunks_mut(chunk).enumerate().for_each(|(k, c)| f(k, c));
}
