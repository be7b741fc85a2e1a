//! Grids of independent particle runs.
//!
//! Record `i` of a sweep runs with seed `derive_seed(master, i)`, so the
//! output depends only on the master seed and the grid, never on the number
//! of workers or the order in which records finish.

use std::time::Instant;

use rayon::prelude::*;
use rba_core::particles::{run, InitMode, SimConfig};
use rba_core::rng::derive_seed;
use rba_core::Rotation;
use serde::Serialize;

use crate::table::{num, Table};

/// Steps per sweep run, `t = 20` at `Δt = 0.04`.
pub const SWEEP_STEPS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub rho_values: Vec<f64>,
    /// Target initial order parameters: `1` starts aligned, `0` uniform,
    /// anything else from the von Mises law with that order.
    pub c_init_values: Vec<f64>,
    pub replicates: usize,
    /// Template; `rho`, `init` and `seed` are overwritten per record.
    pub sim: SimConfig,
}

impl SweepSpec {
    /// 25 densities × 5 initial orders × 4 replicates = 500 runs. The
    /// densities are dense on `[4, 7]` around the two thresholds.
    pub fn default_grid() -> Self {
        let mut rho_values = vec![2.0, 3.0];
        rho_values.extend((0..=20).map(|i| 4.0 + 0.15 * i as f64));
        rho_values.extend([8.0, 10.0]);
        let mut sim = SimConfig::new(1.0, InitMode::Uniform, 0);
        sim.n_steps = SWEEP_STEPS;
        SweepSpec { rho_values, c_init_values: vec![0.0, 0.25, 0.5, 0.75, 1.0], replicates: 4, sim }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(!self.rho_values.is_empty(), "empty density grid");
        anyhow::ensure!(!self.c_init_values.is_empty(), "empty initial order grid");
        anyhow::ensure!(self.replicates >= 1, "replicates must be at least 1");
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rho_values.len() * self.c_init_values.len() * self.replicates
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(rho, c_target)` of record `index`, replicates innermost.
    pub fn point(&self, index: usize) -> (f64, f64) {
        let per_rho = self.c_init_values.len() * self.replicates;
        (self.rho_values[index / per_rho], self.c_init_values[(index % per_rho) / self.replicates])
    }
}

/// Initial condition for a target order parameter.
pub fn init_for(c_target: f64) -> InitMode {
    if c_target == 1.0 {
        InitMode::Aligned(Rotation::IDENTITY)
    } else if c_target == 0.0 {
        InitMode::Uniform
    } else {
        InitMode::VonMisesTargetC(c_target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub index: usize,
    pub rho: f64,
    pub c_target: f64,
    pub c_initial: f64,
    pub c_final: f64,
    pub seed: u64,
    /// Seconds; excluded from the CSV so that it stays reproducible.
    pub wall_time: f64,
    /// `None` on success, otherwise the error of this record.
    pub error: Option<String>,
}

/// Runs record `index` of `spec`.
pub fn run_record(spec: &SweepSpec, master_seed: u64, index: usize) -> RunRecord {
    let (rho, c_target) = spec.point(index);
    let seed = derive_seed(master_seed, index as u64);
    let cfg = SimConfig { rho, seed, init: init_for(c_target), ..spec.sim };
    let start = Instant::now();
    let out = run(&cfg);
    let wall_time = start.elapsed().as_secs_f64();
    let (c_initial, c_final, error) = match out {
        Ok(ts) => (ts.c_values[0], ts.final_c(), None),
        Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
    };
    RunRecord { index, rho, c_target, c_initial, c_final, seed, wall_time, error }
}

/// Runs every record on `threads` workers; the result is in record order.
pub fn run_sweep(spec: &SweepSpec, master_seed: u64, threads: usize) -> anyhow::Result<Vec<RunRecord>> {
    spec.validate()?;
    let pool = crate::parallel::pool(threads)?;
    Ok(pool.install(|| (0..spec.len()).into_par_iter().map(|i| run_record(spec, master_seed, i)).collect()))
}

/// Columns `index,rho,c_target,c_initial,c_final,seed,status`.
pub fn records_table(records: &[RunRecord]) -> Table {
    let mut t = Table::new(&["index", "rho", "c_target", "c_initial", "c_final", "seed", "status"]);
    for r in records {
        let status = match &r.error {
            None => "ok".to_string(),
            Some(e) => format!("\"{}\"", e.replace('"', "'")),
        };
        let c = |x: f64| if x.is_nan() { String::new() } else { num(x) };
        t.push(vec![
            r.index.to_string(),
            num(r.rho),
            num(r.c_target),
            c(r.c_initial),
            c(r.c_final),
            r.seed.to_string(),
            status,
        ]);
    }
    t
}
