//! Trial-level data parallelism.
//!
//! Work items are indexed and their results are collected in index order, so
//! the outcome of a run never depends on the scheduler or the worker count.

use crate::Result;

/// How independent trials are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    /// Rayon work stealing; falls back to sequential execution when the crate
    /// is built without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

pub(crate) fn map_indexed<T, F>(
    count: u64,
    execution: Execution,
    workers: Option<usize>,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    match execution {
        Execution::Sequential => (0..count).map(f).collect(),
        Execution::Parallel => parallel_map(count, workers, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(count: u64, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;

    let run = || (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match workers {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::Error::ThreadPool(e.to_string()))?
            .install(run),
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(count: u64, _workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..count).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_index_order() {
        let square = |i: u64| -> Result<u64> { Ok(i * i) };
        let seq = map_indexed(1000, Execution::Sequential, None, square).unwrap();
        let par = map_indexed(1000, Execution::Parallel, Some(3), square).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq[31], 961);
    }

    #[test]
    fn first_error_is_reported() {
        let r = map_indexed(10, Execution::Parallel, None, |i| {
            if i == 7 {
                Err(crate::Error::EmptyLedger)
            } else {
                Ok(i)
            }
        });
        assert!(r.is_err());
    }
}
