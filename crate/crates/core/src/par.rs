//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool;
//! without it, or with one worker, everything runs on the calling thread.
//! Callers index work items and derive per-item random streams from the item
//! index, so results never depend on the worker count.

use serde::{Deserialize, Serialize};

/// Environment variable overriding the default worker count.
pub const WORKERS_ENV: &str = "SECNET_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exec {
    /// 0 means "all available cores".
    workers: usize,
}

impl Default for Exec {
    fn default() -> Self {
        Exec::from_env()
    }
}

impl Exec {
    pub fn sequential() -> Self {
        Exec { workers: 1 }
    }

    pub fn with_workers(workers: usize) -> Self {
        Exec { workers }
    }

    /// Reads [`WORKERS_ENV`], falling back to all cores.
    pub fn from_env() -> Self {
        let workers = std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(0);
        Exec { workers }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn is_sequential(&self) -> bool {
        self.workers == 1 || !cfg!(feature = "parallel")
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        if self.is_sequential() || n <= 1 {
            return (0..n).map(f).collect();
        }
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.install(|| (0..n).into_par_iter().map(f).collect())
        }
        #[cfg(not(feature = "parallel"))]
        unreachable!()
    }

    /// Applies `f(index, item)` to every element of `items`.
    pub fn for_each_mut<T, F>(&self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        if self.is_sequential() || items.len() <= 1 {
            items.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
            return;
        }
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.install(|| items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x)))
        }
    }

    #[cfg(feature = "parallel")]
    fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> R {
        if self.workers == 0 {
            return op();
        }
        pool(self.workers).install(op)
    }
}

#[cfg(feature = "parallel")]
fn pool(workers: usize) -> std::sync::Arc<rayon::ThreadPool> {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};

    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> = OnceLock::new();
    let mut pools = POOLS.get_or_init(Default::default).lock().unwrap();
    pools
        .entry(workers)
        .or_insert_with(|| {
            Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .expect("failed to build thread pool"),
            )
        })
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_for_any_worker_count() {
        let expect: Vec<usize> = (0..1000).map(|i| i * i).collect();
        for w in [0, 1, 3, 8] {
            assert_eq!(Exec::with_workers(w).map(1000, |i| i * i), expect);
        }
    }

    #[test]
    fn for_each_mut_visits_each_item_once() {
        let mut v = vec![0u32; 257];
        Exec::with_workers(4).for_each_mut(&mut v, |i, x| *x += i as u32);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i as u32));
    }
}
