//! Unit quaternions, the double cover `Φ: ℍ₁ → SO(3)` and the linear
//! isomorphism `φ` from 3×3 matrices onto 4×4 traceless symmetric Q-tensors.
//!
//! `φ` is defined by `qᵀ φ(J) q = ½ J·Φ(q)` for every unit quaternion `q`.

use core::ops::{Mul, Neg};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{solve_dense, Mat3, Vec3};
use crate::math::{abs, sqrt};
use crate::so3::Rotation;
use crate::{Error, Result};

/// `q = w + x i + y j + z k` with `|q| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    pub(crate) w: f64,
    pub(crate) x: f64,
    pub(crate) y: f64,
    pub(crate) z: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Accepts components whose norm is within `1e-9` of one and rescales
    /// them exactly onto the sphere.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let n = sqrt(w * w + x * x + y * y + z * z);
        if !n.is_finite() || abs(n - 1.0) > 1e-9 {
            return Err(Error::InvalidInput("quaternion is not of unit norm"));
        }
        Ok(UnitQuaternion { w: w / n, x: x / n, y: y / n, z: z / n })
    }

    /// Normalizes any nonzero finite 4-vector.
    pub fn normalize(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let n = sqrt(w * w + x * x + y * y + z * z);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput("cannot normalize a zero or non-finite quaternion"));
        }
        Ok(UnitQuaternion { w: w / n, x: x / n, y: y / n, z: z / n })
    }

    /// `cos(θ/2) + sin(θ/2) n`.
    pub fn from_axis_angle(theta: f64, axis: Vec3) -> Result<Self> {
        let (s, c) = (crate::math::sin(0.5 * theta), crate::math::cos(0.5 * theta));
        Self::new(c, s * axis.x, s * axis.y, s * axis.z)
    }

    /// Uniform on S³: a normalized standard Gaussian in ℝ⁴.
    pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v: [f64; 4] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            if let Ok(q) = Self::normalize(v[0], v[1], v[2], v[3]) {
                return q;
            }
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn conjugate(&self) -> Self {
        UnitQuaternion { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn dot(&self, o: &UnitQuaternion) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Conjugation `q u q*` of the imaginary quaternion `u`.
    pub fn rotate(&self, u: Vec3) -> Vec3 {
        let v = Vec3::new(self.x, self.y, self.z);
        let t = v.cross(u).scale(2.0);
        u + t.scale(self.w) + v.cross(t)
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;
    /// Hamilton product.
    fn mul(self, o: UnitQuaternion) -> UnitQuaternion {
        UnitQuaternion {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }
}

impl Neg for UnitQuaternion {
    type Output = UnitQuaternion;
    fn neg(self) -> UnitQuaternion {
        UnitQuaternion { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
    }
}

/// The quadratic map `Φ` evaluated on an arbitrary 4-vector. On the unit
/// sphere it is the rotation `u ↦ q u q*`.
fn phi_quadratic(q: [f64; 4]) -> Mat3 {
    let [w, x, y, z] = q;
    Mat3([
        [w * w + x * x - y * y - z * z, 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), w * w - x * x + y * y - z * z, 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), w * w - x * x - y * y + z * z],
    ])
}

/// The double cover `Φ(q)`; `Φ(q) = Φ(−q)` holds bit for bit.
pub fn phi_map(q: &UnitQuaternion) -> Rotation {
    Rotation::from_matrix_unchecked(phi_quadratic(q.to_array()))
}

/// One of the two quaternions covering `a`, chosen with its first nonzero
/// component positive. Uses the largest of `4w², 4x², 4y², 4z²` as pivot.
pub fn quaternion_of(a: &Rotation) -> UnitQuaternion {
    let r = &a.matrix().0;
    let t = r[0][0] + r[1][1] + r[2][2];
    let cand = [1.0 + t, 1.0 + r[0][0] - r[1][1] - r[2][2], 1.0 - r[0][0] + r[1][1] - r[2][2], 1.0 - r[0][0] - r[1][1] + r[2][2]];
    let k = (0..4).max_by(|&i, &j| cand[i].total_cmp(&cand[j])).unwrap_or(0);
    let s = 2.0 * sqrt(cand[k].max(0.0));
    let (wx, wy, wz) = (r[2][1] - r[1][2], r[0][2] - r[2][0], r[1][0] - r[0][1]);
    let (xy, xz, yz) = (r[1][0] + r[0][1], r[0][2] + r[2][0], r[2][1] + r[1][2]);
    let v = match k {
        0 => [0.25 * s, wx / s, wy / s, wz / s],
        1 => [wx / s, 0.25 * s, xy / s, xz / s],
        2 => [wy / s, xy / s, 0.25 * s, yz / s],
        _ => [wz / s, xz / s, yz / s, 0.25 * s],
    };
    let n = sqrt(v.iter().map(|c| c * c).sum::<f64>());
    let mut q = [v[0] / n, v[1] / n, v[2] / n, v[3] / n];
    if let Some(&first) = q.iter().find(|c| **c != 0.0) {
        if first < 0.0 {
            for c in q.iter_mut() {
                *c = -*c;
            }
        }
    }
    UnitQuaternion { w: q[0], x: q[1], y: q[2], z: q[3] }
}

/// A traceless symmetric 4×4 matrix, stored as its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QTensor {
    upper: [f64; 10],
}

const fn packed(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    // rows of the upper triangle have lengths 4, 3, 2, 1
    a * 4 - a * (a.saturating_sub(1)) / 2 + (b - a)
}

/// Coordinates used by the 9×9 representation of `φ`.
const COORDS: [(usize, usize); 9] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

impl QTensor {
    pub const ZERO: QTensor = QTensor { upper: [0.0; 10] };

    /// Builds from a full matrix; requires exact symmetry and trace within 1e-12.
    pub fn from_matrix(m: [[f64; 4]; 4]) -> Result<Self> {
        let mut upper = [0.0; 10];
        for i in 0..4 {
            for j in i..4 {
                if m[i][j] != m[j][i] || !m[i][j].is_finite() {
                    return Err(Error::InvalidInput("Q-tensor must be finite and symmetric"));
                }
                upper[packed(i, j)] = m[i][j];
            }
        }
        let tr = m[0][0] + m[1][1] + m[2][2] + m[3][3];
        if abs(tr) > 1e-12 {
            return Err(Error::InvalidInput("Q-tensor must be trace-free"));
        }
        Ok(QTensor { upper })
    }

    /// `q ⊗ q − ¼ I₄`.
    pub fn from_quaternion(q: &UnitQuaternion) -> Self {
        let v = q.to_array();
        let mut upper = [0.0; 10];
        for i in 0..4 {
            for j in i..4 {
                upper[packed(i, j)] = v[i] * v[j] - if i == j { 0.25 } else { 0.0 };
            }
        }
        QTensor { upper }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[packed(i, j)]
    }

    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        core::array::from_fn(|i| core::array::from_fn(|j| self.get(i, j)))
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.get(i, i)).sum()
    }

    /// `qᵀ T q`.
    pub fn quadratic_form(&self, q: &[f64; 4]) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += q[i] * self.get(i, j) * q[j];
            }
        }
        s
    }

    pub fn max_abs_diff(&self, o: &QTensor) -> f64 {
        self.upper
            .iter()
            .zip(o.upper.iter())
            .map(|(a, b)| abs(a - b))
            .fold(0.0, f64::max)
    }

    fn coords(&self) -> [f64; 9] {
        core::array::from_fn(|k| self.get(COORDS[k].0, COORDS[k].1))
    }

    fn from_coords(c: [f64; 9]) -> Self {
        let mut upper = [0.0; 10];
        for (k, &(i, j)) in COORDS.iter().enumerate() {
            upper[packed(i, j)] = c[k];
        }
        upper[packed(3, 3)] = -(c[0] + c[1] + c[2]);
        QTensor { upper }
    }
}

/// Matrix of the bilinear form polarizing `q ↦ ½ E_ij·Φ(q) = ¼ Φ_ij(q)`.
fn polarized_basis(i: usize, j: usize) -> [f64; 9] {
    let e = |a: usize| -> [f64; 4] { core::array::from_fn(|k| if k == a { 1.0 } else { 0.0 }) };
    let quad = |v: [f64; 4]| 0.25 * phi_quadratic(v).0[i][j];
    core::array::from_fn(|k| {
        let (a, b) = COORDS[k];
        if a == b {
            quad(e(a))
        } else {
            let plus: [f64; 4] = core::array::from_fn(|m| e(a)[m] + e(b)[m]);
            let minus: [f64; 4] = core::array::from_fn(|m| e(a)[m] - e(b)[m]);
            0.25 * (quad(plus) - quad(minus))
        }
    })
}

/// The 9×9 matrix of `φ`: column `3i + j` holds the coordinates of `φ(E_ij)`.
pub fn iso_phi_matrix() -> [[f64; 9]; 9] {
    let mut m = [[0.0; 9]; 9];
    for i in 0..3 {
        for j in 0..3 {
            let col = polarized_basis(i, j);
            for (k, v) in col.iter().enumerate() {
                m[k][3 * i + j] = *v;
            }
        }
    }
    m
}

/// `φ(J)`, characterized by `qᵀ φ(J) q = ½ J·Φ(q)`.
pub fn iso_phi(j: &Mat3) -> QTensor {
    let m = iso_phi_matrix();
    let flat = j.to_row_major();
    let c = core::array::from_fn(|k| (0..9).map(|l| m[k][l] * flat[l]).sum());
    QTensor::from_coords(c)
}

/// `φ⁻¹(T)`.
pub fn iso_phi_inv(t: &QTensor) -> Mat3 {
    let x = solve_dense(iso_phi_matrix(), t.coords()).expect("φ is an isomorphism");
    Mat3::from_row_major(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{rodrigues, AxisAngle};
    use rand::rngs::SmallRng;
    use rand::SeedableRng;

    #[test]
    fn packed_indices_are_a_bijection() {
        let mut seen = [false; 10];
        for i in 0..4 {
            for j in i..4 {
                assert!(!seen[packed(i, j)]);
                seen[packed(i, j)] = true;
                assert_eq!(packed(i, j), packed(j, i));
            }
        }
    }

    #[test]
    fn constructor_rejects_non_unit() {
        assert!(UnitQuaternion::new(1.0, 1e-3, 0.0, 0.0).is_err());
        assert!(UnitQuaternion::new(1.0 + 1e-10, 0.0, 0.0, 0.0).is_ok());
        assert!(UnitQuaternion::normalize(0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn identity_and_half_turn() {
        assert_eq!(phi_map(&UnitQuaternion::IDENTITY).into_matrix(), Mat3::IDENTITY);
        let r = Rotation::new(Mat3::diag(Vec3::new(-1.0, -1.0, 1.0))).unwrap();
        assert_eq!(quaternion_of(&r).to_array(), [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(quaternion_of(&Rotation::IDENTITY).to_array(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn axis_angle_quaternion_is_rodrigues() {
        let mut rng = SmallRng::seed_from_u64(11);
        for _ in 0..200 {
            let theta = rng.random_range(0.0..core::f64::consts::PI);
            let raw = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let n = raw.scale(1.0 / raw.norm());
            let q = UnitQuaternion::from_axis_angle(theta, n).unwrap();
            let r = rodrigues(&AxisAngle::new(theta, n).unwrap());
            assert!((phi_map(&q).into_matrix() - r.into_matrix()).max_abs() < 1e-14);
        }
    }

    #[test]
    fn phi_is_conjugation() {
        let mut rng = SmallRng::seed_from_u64(12);
        for _ in 0..100 {
            let q = UnitQuaternion::sample_uniform(&mut rng);
            let u = Vec3::new(rng.random(), rng.random(), rng.random());
            assert!((phi_map(&q).apply(u) - q.rotate(u)).norm() < 1e-14);
            let pu = UnitQuaternion { w: 0.0, x: u.x, y: u.y, z: u.z };
            let c = q * pu * q.conjugate();
            assert!(c.w.abs() < 1e-14);
            assert!((Vec3::new(c.x, c.y, c.z) - q.rotate(u)).norm() < 1e-14);
        }
    }

    #[test]
    fn q_tensor_validation() {
        let mut m = [[0.0; 4]; 4];
        m[0][0] = 1.0;
        assert!(QTensor::from_matrix(m).is_err());
        m[3][3] = -1.0;
        assert!(QTensor::from_matrix(m).is_ok());
        m[0][1] = 0.5;
        assert!(QTensor::from_matrix(m).is_err());
    }

    #[test]
    fn iso_phi_of_identity_quadratic_form() {
        let t = iso_phi(&Mat3::IDENTITY);
        let mut rng = SmallRng::seed_from_u64(13);
        for _ in 0..100 {
            let q = UnitQuaternion::sample_uniform(&mut rng);
            let lhs = t.quadratic_form(&q.to_array());
            assert!((lhs - 0.25 * phi_map(&q).matrix().trace()).abs() < 1e-14);
        }
        assert_eq!(iso_phi(&Mat3::ZERO), QTensor::ZERO);
        assert_eq!(iso_phi_inv(&QTensor::ZERO), Mat3::ZERO);
    }

    #[test]
    fn iso_phi_preserves_diagonals() {
        let t = iso_phi(&Mat3::diag(Vec3::new(0.7, -1.3, 2.1)));
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(t.get(i, j), 0.0);
                }
            }
        }
    }
}
