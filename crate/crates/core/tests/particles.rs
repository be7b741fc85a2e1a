use proptest::prelude::*;
use rba_core::equilibrium::{c1, solve_branch, Branch};
use rba_core::particles::*;
use rba_core::so3::{exp_so3, Rotation};
use rba_core::stats::{linear_fit, mean};
use rba_core::{Mat3, Vec3};

fn config(rho: f64, init: InitMode, seed: u64) -> SimConfig {
    SimConfig::new(rho, init, seed)
}

#[test]
fn initial_order_parameters() {
    let a0 = exp_so3(Vec3::new(0.4, -1.1, 0.3));
    let e = init_ensemble(&config(5.0, InitMode::Aligned(a0), 1)).unwrap();
    assert!((e.order_parameter() - 1.0).abs() < 1e-14);
    assert!(e.rotations.iter().all(|r| *r == a0));
    let u = init_ensemble(&config(5.0, InitMode::Uniform, 1)).unwrap();
    assert!(u.order_parameter() < 0.15);
}

#[test]
fn von_mises_start_hits_target_order() {
    let mut cfg = config(5.0, InitMode::VonMisesTargetC(0.5), 3);
    cfg.n_particles = 100_000;
    let e = init_ensemble(&cfg).unwrap();
    // the mean of A is α-aligned with I, so c is the mean diagonal entry
    let m = e.mean();
    let c_diag = m.trace() / 3.0;
    assert!((0.48..=0.52).contains(&c_diag), "{c_diag}");
    assert!((0.48..=0.52).contains(&e.order_parameter()));
    let alpha = alpha_for_order(0.5).unwrap();
    assert!((c1(alpha).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn out_of_range_targets_are_domain_errors() {
    for c in [-0.34, 1.0, 1.5, f64::NAN] {
        let cfg = config(5.0, InitMode::VonMisesTargetC(c), 0);
        assert!(matches!(init_ensemble(&cfg), Err(rba_core::Error::Domain { .. })));
    }
    let mut cfg = config(20.0, InitMode::Uniform, 0);
    cfg.dt = 0.04;
    assert!(cfg.validate().is_err());
}

#[test]
fn pure_noise_diffuses_at_rate_six() {
    // E[3 − tr A(t)] = 3(1 − e^{−2t}) for Brownian motion with this normalization
    let mut cfg = config(0.0, InitMode::Aligned(Rotation::IDENTITY), 17);
    cfg.n_particles = 10_000;
    cfg.dt = 0.001;
    let mut ens = init_ensemble(&cfg).unwrap();
    let (mut ts, mut ys) = (vec![0.0], vec![0.0]);
    for _ in 0..20 {
        step(&mut ens, &cfg);
        let sq: Vec<f64> = ens.rotations.iter().map(|r| (*r.matrix() - Mat3::IDENTITY).dot(&(*r.matrix() - Mat3::IDENTITY))).collect();
        ts.push(ens.time);
        ys.push(mean(&sq));
    }
    let (slope, _) = linear_fit(&ts, &ys).unwrap();
    assert!((slope - 6.0).abs() < 0.15 * 6.0, "slope {slope}");
}

#[test]
fn orthonormality_drift_stays_small() {
    let mut cfg = config(10.0, InitMode::Uniform, 5);
    cfg.n_particles = 8;
    cfg.renorm_every = usize::MAX;
    let mut ens = init_ensemble(&cfg).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        step(&mut ens, &cfg);
        worst = worst.max(ens.max_orthogonality_error());
    }
    assert!(worst < 1e-7, "{worst}");
}

#[test]
fn renormalization_restores_orthonormality() {
    let mut cfg = config(10.0, InitMode::Uniform, 5);
    cfg.n_particles = 8;
    cfg.renorm_every = 10;
    let mut ens = init_ensemble(&cfg).unwrap();
    for _ in 0..10 {
        step(&mut ens, &cfg);
    }
    assert!(ens.max_orthogonality_error() < 1e-14);
}

#[test]
fn conjugated_ensembles_follow_conjugated_trajectories() {
    let r = exp_so3(Vec3::new(0.9, -0.2, 1.7));
    let (rho, dt, seed) = (6.0, 0.04, 11);
    let mut cfg = config(rho, InitMode::Uniform, seed);
    cfg.n_particles = 40;
    let mut a = init_ensemble(&cfg).unwrap().rotations;
    let mut b: Vec<Rotation> = a.iter().map(|x| r * *x * r.transpose()).collect();
    for step in 0..50u64 {
        let ja = mean_rotation(&a).scale(rho);
        let jb = mean_rotation(&b).scale(rho);
        for k in 0..a.len() {
            let eta = particle_noise(seed, k, step);
            a[k] = lie_update(&a[k], &ja, dt, eta);
            b[k] = lie_update(&b[k], &jb, dt, r.apply(eta));
        }
    }
    for (x, y) in a.iter().zip(&b) {
        let conj = *r.matrix() * *x.matrix() * r.matrix().transpose();
        assert!((conj - *y.matrix()).max_abs() < 1e-10);
    }
}

struct Reversed;

impl ParticleMap for Reversed {
    fn map(&self, rs: &[Rotation], f: &(dyn Fn(usize, &Rotation) -> Rotation + Sync)) -> Vec<Rotation> {
        let mut out: Vec<(usize, Rotation)> = rs.iter().enumerate().rev().map(|(k, a)| (k, f(k, a))).collect();
        out.reverse();
        out.into_iter().map(|(_, a)| a).collect()
    }
}

#[test]
fn update_order_does_not_change_results() {
    let mut cfg = config(7.0, InitMode::Uniform, 21);
    cfg.n_particles = 64;
    cfg.n_steps = 30;
    cfg.renorm_every = 8;
    for scheme in [Scheme::Lie, Scheme::Naive] {
        assert_eq!(run_with(&cfg, scheme, &Sequential).unwrap(), run_with(&cfg, scheme, &Reversed).unwrap());
    }
}

#[test]
fn disorder_at_low_density() {
    let ts = run(&config(1.0, InitMode::Aligned(Rotation::IDENTITY), 0)).unwrap();
    assert!((ts.c_values[0] - 1.0).abs() < 1e-15);
    assert!(ts.final_c() < 0.25, "{}", ts.final_c());
}

#[test]
fn order_at_high_density() {
    let target = c1(solve_branch(Branch::AxialUp, 10.0).unwrap()).unwrap();
    let ts = run(&config(10.0, InitMode::Uniform, 0)).unwrap();
    assert!(ts.c_values[0] < 0.15);
    assert!((ts.final_c() - target).abs() < 0.1, "{} vs {target}", ts.final_c());
}

#[test]
fn bistability_at_intermediate_density() {
    let (mut high, mut low) = (0, 0);
    for seed in 0..20 {
        if run(&config(5.0, InitMode::Aligned(Rotation::IDENTITY), seed)).unwrap().final_c() > 0.3 {
            high += 1;
        }
        if run(&config(5.0, InitMode::Uniform, seed)).unwrap().final_c() < 0.2 {
            low += 1;
        }
    }
    assert!(high > 10 && low > 10, "aligned high {high}, uniform low {low}");
}

#[test]
fn flux_norm_and_order_parameter_agree() {
    let cfg = config(4.0, InitMode::VonMisesTargetC(0.3), 8);
    let ts = run(&cfg).unwrap();
    for (c, f) in ts.c_values.iter().zip(&ts.flux_norms) {
        assert!((c - (2.0f64 / 3.0).sqrt() * f / cfg.rho).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn order_parameter_in_unit_interval(seed in any::<u64>(), rho in 0.0f64..12.0, n in 1usize..40) {
        let mut cfg = config(rho, InitMode::Uniform, seed);
        cfg.n_particles = n;
        cfg.n_steps = 10;
        let ts = run(&cfg).unwrap();
        prop_assert!(ts.c_values.iter().all(|&c| (0.0..=1.0 + 1e-12).contains(&c)));
    }
}
