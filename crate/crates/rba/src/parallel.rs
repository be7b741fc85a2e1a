//! Data parallelism.

use rayon::prelude::*;
use rba_core::particles::ParticleMap;
use rba_core::Rotation;

/// Environment variable holding the worker count.
pub const THREADS_VAR: &str = "RBA_THREADS";

/// Maps particles on the current rayon pool, preserving order.
pub struct Rayon;

impl ParticleMap for Rayon {
    fn map(&self, rs: &[Rotation], f: &(dyn Fn(usize, &Rotation) -> Rotation + Sync)) -> Vec<Rotation> {
        rs.par_iter().enumerate().map(|(k, a)| f(k, a)).collect()
    }
}

/// Worker count from `RBA_THREADS`, defaulting to the logical core count.
pub fn thread_count() -> anyhow::Result<usize> {
    match std::env::var(THREADS_VAR) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => anyhow::bail!("{THREADS_VAR} must be a positive integer, got {s:?}"),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// A dedicated pool with `threads` workers.
pub fn pool(threads: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}
