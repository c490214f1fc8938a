//! Replication scheduling.
//!
//! Trials are independent and own their random streams, so a batch of seeds
//! can be mapped in any order. Results always come back ordered by seed.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Exec {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled and falls
    /// back to sequential execution otherwise. `workers = None` uses the
    /// global pool.
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Map `f` over `seeds`, returning results in seed order.
pub fn map_seeds<T, F>(seeds: &[u64], exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return seeds.par_iter().map(|&s| f(s)).collect();
    }
    let _ = exec;
    seeds.iter().map(|&s| f(s)).collect()
}

/// Run `op` inside a pool of `workers` threads. `None` uses the global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, op: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(n) = workers {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(op);
        }
    }
    let _ = workers;
    op()
}

/// Seeds `base + 1 ..= base + reps`.
pub fn seed_range(base: u64, reps: usize) -> Vec<u64> {
    (1..=reps as u64).map(|i| base.wrapping_add(i)).collect()
}
