//! Thread-pool sizing shared by the Monte Carlo and audit code.
//!
//! Work is always split into a fixed number of shards with their own seeds, so
//! results do not depend on how many threads execute them.

use rayon::ThreadPool;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "REACHSTL_THREADS";

/// Number of independently seeded shards per parallel job.
pub const SHARDS: usize = 64;

pub(crate) fn pool() -> ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        builder = builder.num_threads(n);
    }
    builder.build().expect("thread pool construction")
}

/// Splits `total` items into `SHARDS` near-equal counts.
pub(crate) fn shard_sizes(total: usize) -> Vec<usize> {
    let base = total / SHARDS;
    let extra = total % SHARDS;
    (0..SHARDS).map(|i| base + usize::from(i < extra)).collect()
}
