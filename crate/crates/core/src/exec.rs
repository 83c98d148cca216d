//! Execution strategy for batches of independent work.
//!
//! The probe batches of the sample-and-hold method are `m + 1` independent
//! forward solves; they can run on a rayon pool (the `parallel` feature,
//! on by default) or strictly sequentially.  Results are gathered by index
//! either way, so the outcome is bit-identical across strategies and
//! thread counts — only wall time changes.
//!
//! The environment variable `BANACH_OC_THREADS` caps the probe
//! concurrency: `0` forces the sequential path, any positive `k` runs on a
//! dedicated `k`-thread pool, and unset uses the rayon default.  Without
//! the `parallel` feature every strategy degrades to sequential.

#[cfg(feature = "parallel")]
use std::collections::HashMap;
#[cfg(feature = "parallel")]
use std::sync::{Arc, Mutex, OnceLock};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Name of the environment variable read by [`Parallelism::from_env`].
pub const THREADS_ENV_VAR: &str = "BANACH_OC_THREADS";

/// How to run an indexed batch of independent jobs.
#[derive(Debug, Clone)]
pub enum Parallelism {
    /// One job after another on the calling thread.
    Sequential,
    /// Rayon's global pool.
    #[cfg(feature = "parallel")]
    Rayon,
    /// A dedicated pool with a fixed thread count.
    #[cfg(feature = "parallel")]
    RayonPool(Arc<rayon::ThreadPool>),
}

impl Default for Parallelism {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Parallelism::Rayon
        }
        #[cfg(not(feature = "parallel"))]
        {
            Parallelism::Sequential
        }
    }
}

#[cfg(feature = "parallel")]
fn pool_with_threads(threads: usize) -> Arc<rayon::ThreadPool> {
    // Pools are cached per size: descent loops resolve the strategy once
    // per probe batch and must not pay pool construction every time.
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> = OnceLock::new();
    let pools = POOLS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = pools.lock().expect("pool cache poisoned");
    guard
        .entry(threads)
        .or_insert_with(|| {
            Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .expect("building a rayon pool"),
            )
        })
        .clone()
}

impl Parallelism {
    /// Resolve the strategy from `BANACH_OC_THREADS` (see module docs).
    /// Unparsable values fall back to the default strategy.
    pub fn from_env() -> Self {
        match std::env::var(THREADS_ENV_VAR) {
            Ok(raw) => match raw.trim().parse::<usize>() {
                Ok(0) => Parallelism::Sequential,
                #[cfg(feature = "parallel")]
                Ok(k) => Parallelism::RayonPool(pool_with_threads(k)),
                #[cfg(not(feature = "parallel"))]
                Ok(_) => Parallelism::Sequential,
                Err(_) => Parallelism::default(),
            },
            Err(_) => Parallelism::default(),
        }
    }

    /// Run `f(0), ..., f(n-1)` and collect the outputs in index order.
    ///
    /// On failure the error with the smallest index is returned, regardless
    /// of completion order, so error reporting is deterministic too.
    pub fn run_indexed<T, E, F>(&self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        match self {
            Parallelism::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Parallelism::Rayon => {
                let results: Vec<Result<T, E>> = (0..n).into_par_iter().map(f).collect();
                results.into_iter().collect()
            }
            #[cfg(feature = "parallel")]
            Parallelism::RayonPool(pool) => pool.install(|| {
                let results: Vec<Result<T, E>> = (0..n).into_par_iter().map(f).collect();
                results.into_iter().collect()
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_collects_in_order() {
        let out: Result<Vec<usize>, ()> = Parallelism::Sequential.run_indexed(5, |i| Ok(i * i));
        assert_eq!(out.unwrap(), vec![0, 1, 4, 9, 16]);
    }

    #[test]
    fn sequential_returns_first_error() {
        let out: Result<Vec<usize>, usize> =
            Parallelism::Sequential.run_indexed(5, |i| if i >= 2 { Err(i) } else { Ok(i) });
        assert_eq!(out.unwrap_err(), 2);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn rayon_matches_sequential() {
        let work = |i: usize| -> Result<f64, ()> { Ok((i as f64).sin() * (i as f64).cos()) };
        let seq: Vec<f64> = Parallelism::Sequential.run_indexed(64, work).unwrap();
        let par: Vec<f64> = Parallelism::Rayon.run_indexed(64, work).unwrap();
        assert_eq!(seq, par);
        let pooled: Vec<f64> = Parallelism::RayonPool(super::pool_with_threads(3))
            .run_indexed(64, work)
            .unwrap();
        assert_eq!(seq, pooled);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn rayon_reports_lowest_index_error() {
        let out: Result<Vec<usize>, usize> =
            Parallelism::Rayon.run_indexed(64, |i| if i % 7 == 3 { Err(i) } else { Ok(i) });
        assert_eq!(out.unwrap_err(), 3);
    }
}
