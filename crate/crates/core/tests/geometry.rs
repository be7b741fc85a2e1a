use proptest::prelude::*;
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rba_core::linalg::solve_dense;
use rba_core::quaternion::{iso_phi, iso_phi_inv, iso_phi_matrix, phi_map, quaternion_of};
use rba_core::so3::*;
use rba_core::stats::{haar_angle_cdf, ks_one_sample};
use rba_core::{Mat3, QTensor, UnitQuaternion, Vec3};

/// Taylor series with scaling and squaring, independent of Rodrigues.
fn expm_oracle(m: &Mat3) -> Mat3 {
    let mut s = 0;
    let mut a = *m;
    while a.max_abs() > 0.1 {
        a = a.scale(0.5);
        s += 1;
    }
    let mut term = Mat3::IDENTITY;
    let mut sum = Mat3::IDENTITY;
    for k in 1..30 {
        term = (term * a).scale(1.0 / k as f64);
        sum += term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}

fn unit(v: [f64; 3]) -> Vec3 {
    let v = Vec3::from_array(v);
    v.scale(1.0 / v.norm())
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-3.0f64..3.0)
}

fn mat3() -> impl Strategy<Value = [f64; 9]> {
    prop::array::uniform9(-3.0f64..3.0)
}

fn quat() -> impl Strategy<Value = UnitQuaternion> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| UnitQuaternion::normalize(v[0], v[1], v[2], v[3]).unwrap())
}

proptest! {
    #[test]
    fn exp_matches_series(w in vec3()) {
        let w = Vec3::from_array(w);
        let e = exp_so3(w);
        prop_assert!((e.into_matrix() - expm_oracle(&hat(w))).max_abs() < 1e-12);
        prop_assert!(e.orthogonality_error() < 1e-14);
    }

    #[test]
    fn rodrigues_composes_about_fixed_axis(t1 in 0.0f64..3.0, t2 in 0.0f64..3.0, n in vec3()) {
        prop_assume!(Vec3::from_array(n).norm() > 1e-3);
        let n = unit(n);
        let r1 = rodrigues(&AxisAngle::new(t1, n).unwrap());
        let r2 = rodrigues(&AxisAngle::new(t2, n).unwrap());
        let prod = r1 * r2;
        let mut t = (t1 + t2) % (2.0 * std::f64::consts::PI);
        let mut axis = n;
        if t > std::f64::consts::PI {
            t = 2.0 * std::f64::consts::PI - t;
            axis = -n;
        }
        let direct = rodrigues(&AxisAngle::new(t, axis).unwrap());
        prop_assert!((prod.into_matrix() - direct.into_matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn ssvd_invariants(m in mat3()) {
        let j = Mat3::from_row_major(m);
        let s = ssvd(&j).unwrap();
        prop_assert!(s.d.x >= s.d.y && s.d.y >= s.d.z.abs());
        prop_assert!(Rotation::new(*s.p.matrix()).is_ok());
        prop_assert!(Rotation::new(*s.q.matrix()).is_ok());
        prop_assert!((s.reconstruct() - j).max_abs() < 1e-12 * j.max_abs().max(1.0));
        // the sign of d₃ carries the orientation
        prop_assert!((s.d.x * s.d.y * s.d.z - j.det()).abs() < 1e-10 * j.max_abs().powi(3).max(1.0));
    }

    #[test]
    fn ssvd_equivariance(m in mat3(), a in vec3(), b in vec3()) {
        let j = Mat3::from_row_major(m);
        let (p, q) = (exp_so3(Vec3::from_array(a)), exp_so3(Vec3::from_array(b)));
        let d0 = ssvd(&j).unwrap().d;
        let d1 = ssvd(&(p * j * q)).unwrap().d;
        prop_assert!((d0 - d1).norm() < 1e-11 * j.max_abs().max(1.0));
    }

    #[test]
    fn nearest_rotation_beats_random_rotations(m in mat3(), w in vec3()) {
        let j = Mat3::from_row_major(m);
        let (r, dist) = nearest_rotation_with_distance(&j).unwrap();
        prop_assert!(((j - *r.matrix()).norm() - dist).abs() < 1e-10);
        let other = exp_so3(Vec3::from_array(w)) * r;
        prop_assert!((j - *other.matrix()).norm() >= dist - 1e-12);
        let wiggle = exp_so3(Vec3::from_array(w).scale(1e-3)) * r;
        prop_assert!((j - *wiggle.matrix()).norm() >= dist - 1e-12);
    }

    #[test]
    fn tangent_projection_is_orthogonal(w in vec3(), m in mat3(), v in vec3()) {
        let a = exp_so3(Vec3::from_array(w));
        let h = Mat3::from_row_major(m);
        let p = tangent_project(&a, &h);
        // the residual is orthogonal to every tangent vector a·[v]×
        let tangent = *a.matrix() * hat(Vec3::from_array(v));
        prop_assert!((h - p).dot(&tangent).abs() < 1e-12);
        prop_assert!((tangent_project(&a, &p) - p).max_abs() < 1e-12);
    }

    #[test]
    fn half_trace_metric(m in mat3(), n in mat3()) {
        let (a, b) = (Mat3::from_row_major(m), Mat3::from_row_major(n));
        let by_def = 0.5 * (a * b.transpose()).trace();
        prop_assert!((half_trace_inner(&a, &b) - by_def).abs() < 1e-12);
        prop_assert!((half_trace_inner(&a, &b) - half_trace_inner(&b, &a)).abs() < 1e-12);
    }

    #[test]
    fn double_cover_is_exact(q in quat()) {
        prop_assert_eq!(phi_map(&q), phi_map(&-q));
    }

    #[test]
    fn defining_identity_of_phi(q in quat(), m in mat3()) {
        let j = Mat3::from_row_major(m);
        let lhs = 0.5 * half_trace_inner(&j, phi_map(&q).matrix());
        let rhs = iso_phi(&j).quadratic_form(&q.to_array());
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }
}

#[test]
fn homomorphism_on_random_pairs() {
    let mut rng = SmallRng::seed_from_u64(20);
    for _ in 0..1000 {
        let a = UnitQuaternion::sample_uniform(&mut rng);
        let b = UnitQuaternion::sample_uniform(&mut rng);
        let lhs = phi_map(&(a * b)).into_matrix();
        let rhs = phi_map(&a).into_matrix() * phi_map(&b).into_matrix();
        assert!((lhs - rhs).max_abs() < 1e-12);
    }
}

#[test]
fn quaternion_round_trip_on_haar_samples() {
    let mut rng = SmallRng::seed_from_u64(21);
    for _ in 0..1000 {
        let r = haar_sample(&mut rng);
        let q = quaternion_of(&r);
        assert!((phi_map(&q).into_matrix() - r.into_matrix()).max_abs() < 1e-9);
        let first = q.to_array().into_iter().find(|c| *c != 0.0).unwrap();
        assert!(first > 0.0);
    }
}

#[test]
fn quaternion_extraction_near_half_turns() {
    let mut rng = SmallRng::seed_from_u64(22);
    for _ in 0..200 {
        let n = unit([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        let t = std::f64::consts::PI - rng.random_range(0.0..1e-6);
        let r = rodrigues(&AxisAngle::new(t, n).unwrap());
        let q = quaternion_of(&r);
        assert!((phi_map(&q).into_matrix() - r.into_matrix()).max_abs() < 1e-12);
    }
}

#[test]
fn phi_of_rotation_is_projector() {
    let mut rng = SmallRng::seed_from_u64(23);
    for _ in 0..1000 {
        let q = UnitQuaternion::sample_uniform(&mut rng);
        let t = iso_phi(phi_map(&q).matrix());
        assert!(t.max_abs_diff(&QTensor::from_quaternion(&q)) < 1e-12);
        let back = iso_phi_inv(&QTensor::from_quaternion(&q));
        assert!((back - phi_map(&q).into_matrix()).max_abs() < 1e-12);
    }
}

#[test]
fn phi_inverse_round_trip() {
    let mut rng = SmallRng::seed_from_u64(24);
    for _ in 0..1000 {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in i..4 {
                m[i][j] = rng.random_range(-1.0..1.0);
                m[j][i] = m[i][j];
            }
        }
        m[3][3] = -(m[0][0] + m[1][1] + m[2][2]);
        let t = QTensor::from_matrix(m).unwrap();
        assert!(iso_phi(&iso_phi_inv(&t)).max_abs_diff(&t) < 1e-12);
    }
}

#[test]
fn phi_is_bijective() {
    let m = iso_phi_matrix();
    for k in 0..9 {
        let mut e = [0.0; 9];
        e[k] = 1.0;
        assert!(solve_dense(m, e).is_some());
    }
}

#[test]
fn haar_angle_marginal() {
    let mut rng = SmallRng::seed_from_u64(25);
    let angles: Vec<f64> = (0..20000).map(|_| haar_sample(&mut rng).angle()).collect();
    let ks = ks_one_sample(&angles, haar_angle_cdf).unwrap();
    assert!(ks.p_value > 1e-3, "p = {}", ks.p_value);
}

#[test]
fn renormalize_repairs_drift() {
    let r = exp_so3(Vec3::new(0.4, -1.0, 2.0));
    let drifted = *r.matrix() + Mat3::from_fn(|i, j| 1e-8 * (i as f64 - j as f64 + 0.3));
    let fixed = renormalize(&drifted).unwrap();
    assert!(fixed.orthogonality_error() < 1e-14);
    assert!((fixed.into_matrix() - r.into_matrix()).max_abs() < 1e-7);
}
