//! Experiments, file formats and parallel sweeps on top of `rba-core`.
//!
//! * [`table`]: CSV output with a fixed header and 17 significant digits.
//! * [`parallel`]: a rayon [`ParticleMap`](rba_core::particles::ParticleMap)
//!   and the `RBA_THREADS` worker count.
//! * [`sweep`]: grids of independent particle runs with per-record seeds.
//! * [`report`]: the data behind each command-line subcommand.

pub mod parallel;
pub mod report;
pub mod sweep;
pub mod table;

pub use parallel::Rayon;
