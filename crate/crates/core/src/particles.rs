//! N-body simulation of interacting rigid bodies on SO(3).
//!
//! Each step freezes `J = (ρ/N) Σ A_j` and updates every particle by
//!
//! ```text
//! A_k ← exp(½Δt (J A_kᵀ − A_k Jᵀ) + √(2Δt) [η_k]×) A_k
//! ```
//!
//! The noise of particle `k` at step `n` comes from its own generator
//! addressed by `(seed, k, n)`, so the per-particle updates may run in any
//! order or in parallel without changing the result.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::equilibrium::{c1, ALPHA_MAX};
use crate::linalg::{Mat3, Vec3};
use crate::math::sqrt;
use crate::numerics::brent_root;
use crate::rng::{init_rng, step_rng};
use crate::so3::{exp_so3, haar_sample, nearest_rotation, tangent_project, vee, Rotation};
use crate::von_mises::VonMises;
use crate::{Error, Result};

/// Initial distribution of the particles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    /// Every particle equal to the given rotation.
    Aligned(Rotation),
    /// Independent Haar samples.
    Uniform,
    /// Independent samples of `M_{αI₃}` with `c₁(α)` equal to the target.
    VonMisesTargetC(f64),
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Exponential (Lie group) Euler–Maruyama update.
    Lie,
    /// Projected Euler–Maruyama in the ambient space of 3×3 matrices:
    /// `Π(A + Δt P_T(J) + 2√Δt P_T(N₉))`.
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_particles: usize,
    pub rho: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub init: InitMode,
    pub renorm_every: usize,
}

/// Largest accepted `Δt·ρ`.
pub const MAX_DT_RHO: f64 = 0.5;

impl SimConfig {
    /// Default run: `N = 500`, `Δt = 0.04`, 100 steps, renormalized every
    /// 100 steps.
    pub fn new(rho: f64, init: InitMode, seed: u64) -> Self {
        SimConfig { n_particles: 500, rho, dt: 0.04, n_steps: 100, seed, init, renorm_every: 100 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 || self.n_steps == 0 || self.renorm_every == 0 {
            return Err(Error::InvalidInput("particle, step and renormalization counts must be positive"));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::Domain { what: "rho", value: self.rho, domain: "[0, ∞)" });
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain { what: "dt", value: self.dt, domain: "(0, ∞)" });
        }
        if self.dt * self.rho > MAX_DT_RHO {
            return Err(Error::Domain { what: "dt·rho", value: self.dt * self.rho, domain: "(0, 0.5]" });
        }
        if let InitMode::VonMisesTargetC(c) = self.init {
            if !(c > -1.0 / 3.0 && c < 1.0) {
                return Err(Error::Domain { what: "target order parameter", value: c, domain: "(-1/3, 1)" });
            }
        }
        Ok(())
    }
}

/// State of the particle system.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub rotations: Vec<Rotation>,
    pub time: f64,
    /// Number of steps taken; addresses the noise of the next step.
    pub steps: u64,
    pub seed: u64,
}

impl Ensemble {
    /// `(1/N) Σ A_k`, summed pairwise.
    pub fn mean(&self) -> Mat3 {
        mean_rotation(&self.rotations)
    }

    /// `c = √(2/3) ‖(1/N) Σ A_k‖`, equal to `√2/(√3ρ) ‖J‖`.
    pub fn order_parameter(&self) -> f64 {
        order_parameter(&self.mean())
    }

    pub fn max_orthogonality_error(&self) -> f64 {
        self.rotations.iter().map(|r| r.orthogonality_error()).fold(0.0, f64::max)
    }
}

fn tree_sum_rot(rs: &[Rotation]) -> Mat3 {
    match rs.len() {
        0 => Mat3::ZERO,
        1 => *rs[0].matrix(),
        n => {
            let (a, b) = rs.split_at(n / 2);
            tree_sum_rot(a) + tree_sum_rot(b)
        }
    }
}

/// `(1/N) Σ A_k` with a fixed pairwise summation order.
pub fn mean_rotation(rs: &[Rotation]) -> Mat3 {
    tree_sum_rot(rs).scale(1.0 / rs.len() as f64)
}

/// `√(2/3) ‖M‖` for the mean `M` of an ensemble.
pub fn order_parameter(mean: &Mat3) -> f64 {
    sqrt(2.0 / 3.0) * mean.norm()
}

/// Solves `c₁(α) = c` on `[−50, 50]`.
pub fn alpha_for_order(c: f64) -> Result<f64> {
    let f = |a: f64| c1(a).map(|v| v - c).unwrap_or(f64::NAN);
    brent_root(f, -ALPHA_MAX, ALPHA_MAX, 1e-12)
        .map_err(|_| Error::Domain { what: "target order parameter", value: c, domain: "c₁([-50, 50])" })
}

/// Draws the initial ensemble.
pub fn init_ensemble(cfg: &SimConfig) -> Result<Ensemble> {
    cfg.validate()?;
    let mut rng = init_rng(cfg.seed);
    let n = cfg.n_particles;
    let rotations = match cfg.init {
        InitMode::Aligned(a0) => alloc::vec![a0; n],
        InitMode::Uniform => (0..n).map(|_| haar_sample(&mut rng)).collect(),
        InitMode::VonMisesTargetC(c) => {
            let vm = VonMises::new(Mat3::IDENTITY.scale(alpha_for_order(c)?))?;
            (0..n).map(|_| vm.sample(&mut rng)).collect::<Result<_>>()?
        }
    };
    Ok(Ensemble { rotations, time: 0.0, steps: 0, seed: cfg.seed })
}

/// Standard Gaussian vector of particle `k` at step `step`.
pub fn particle_noise(seed: u64, k: usize, step: u64) -> Vec3 {
    let mut rng = step_rng(seed, k as u64, step);
    Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// One exponential update of a single particle with a given noise vector.
pub fn lie_update(a: &Rotation, j: &Mat3, dt: f64, eta: Vec3) -> Rotation {
    let am = a.matrix();
    let drift = (*j * am.transpose() - *am * j.transpose()).scale(0.5 * dt);
    let omega = vee(&drift) + eta.scale(sqrt(2.0 * dt));
    exp_so3(omega) * *a
}

/// One projected Euler–Maruyama update with a given 3×3 Gaussian matrix.
pub fn naive_update(a: &Rotation, j: &Mat3, dt: f64, noise: &Mat3) -> Rotation {
    let m = *a.matrix() + tangent_project(a, j).scale(dt) + tangent_project(a, noise).scale(2.0 * sqrt(dt));
    nearest_rotation(&m).unwrap_or(*a)
}

fn naive_noise(seed: u64, k: usize, step: u64) -> Mat3 {
    let mut rng = step_rng(seed, k as u64, step);
    Mat3::from_fn(|_, _| rng.sample(StandardNormal))
}

/// Update of particle `k` during step `step`, with the periodic
/// renormalization folded in.
pub fn particle_update(cfg: &SimConfig, scheme: Scheme, j: &Mat3, step: u64, k: usize, a: &Rotation) -> Rotation {
    let next = match scheme {
        Scheme::Lie => lie_update(a, j, cfg.dt, particle_noise(cfg.seed, k, step)),
        Scheme::Naive => naive_update(a, j, cfg.dt, &naive_noise(cfg.seed, k, step)),
    };
    if (step + 1).is_multiple_of(cfg.renorm_every as u64) && scheme == Scheme::Lie {
        nearest_rotation(next.matrix()).unwrap_or(next)
    } else {
        next
    }
}

/// Applies `f(k, A_k)` to every particle. The simulator only requires that
/// the output keep the input order; [`Sequential`] is the reference.
pub trait ParticleMap {
    fn map(&self, rs: &[Rotation], f: &(dyn Fn(usize, &Rotation) -> Rotation + Sync)) -> Vec<Rotation>;
}

/// Single-threaded [`ParticleMap`].
pub struct Sequential;

impl ParticleMap for Sequential {
    fn map(&self, rs: &[Rotation], f: &(dyn Fn(usize, &Rotation) -> Rotation + Sync)) -> Vec<Rotation> {
        rs.iter().enumerate().map(|(k, a)| f(k, a)).collect()
    }
}

/// Advances the ensemble by one step of `scheme`.
pub fn step_with(ens: &mut Ensemble, cfg: &SimConfig, scheme: Scheme, pm: &impl ParticleMap) {
    let j = ens.mean().scale(cfg.rho);
    let step = ens.steps;
    let f = |k: usize, a: &Rotation| particle_update(cfg, scheme, &j, step, k, a);
    ens.rotations = pm.map(&ens.rotations, &f);
    ens.steps += 1;
    ens.time = ens.steps as f64 * cfg.dt;
}

/// One synchronous exponential step.
pub fn step(ens: &mut Ensemble, cfg: &SimConfig) {
    step_with(ens, cfg, Scheme::Lie, &Sequential);
}

/// One synchronous projected step.
pub fn naive_step(ens: &mut Ensemble, cfg: &SimConfig) {
    step_with(ens, cfg, Scheme::Naive, &Sequential);
}

/// Order parameter history of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub c_values: Vec<f64>,
    /// `‖J(t)‖` with `J = (ρ/N) Σ A_k`.
    pub flux_norms: Vec<f64>,
}

impl TimeSeries {
    fn record(&mut self, ens: &Ensemble, rho: f64) {
        let m = ens.mean();
        self.times.push(ens.time);
        self.c_values.push(order_parameter(&m));
        self.flux_norms.push(rho * m.norm());
    }

    pub fn final_c(&self) -> f64 {
        self.c_values.last().copied().unwrap_or(f64::NAN)
    }
}

/// Runs `cfg.n_steps` steps from [`init_ensemble`] and records `c(t)` at
/// every step including `t = 0`.
pub fn run_with(cfg: &SimConfig, scheme: Scheme, pm: &impl ParticleMap) -> Result<TimeSeries> {
    let mut ens = init_ensemble(cfg)?;
    let mut ts = TimeSeries::default();
    ts.record(&ens, cfg.rho);
    for _ in 0..cfg.n_steps {
        step_with(&mut ens, cfg, scheme, pm);
        ts.record(&ens, cfg.rho);
    }
    Ok(ts)
}

/// Sequential exponential-scheme run.
pub fn run(cfg: &SimConfig) -> Result<TimeSeries> {
    run_with(cfg, Scheme::Lie, &Sequential)
}
