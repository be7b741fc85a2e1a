//! Geometry of SO(3): rotations, the half-trace metric, tangent projection,
//! Haar sampling and the special singular value decomposition (SSVD).

use core::ops::Mul;

use rand::Rng;

use crate::linalg::{Mat3, Vec3};
use crate::math::{abs, atan2, cos, sin, sqrt};
use crate::quaternion::{phi_map, UnitQuaternion};
use crate::{Error, Result};

/// Tolerance on `‖R Rᵀ − I‖_F` and `|det R − 1|` for a valid rotation.
pub const ORTHO_TOL: f64 = 1e-9;

/// The antisymmetric matrix `[u]×` with `[u]× v = u × v`.
pub fn hat(u: Vec3) -> Mat3 {
    Mat3([[0.0, -u.z, u.y], [u.z, 0.0, -u.x], [-u.y, u.x, 0.0]])
}

/// Inverse of [`hat`] applied to the antisymmetric part of `m`.
pub fn vee(m: &Mat3) -> Vec3 {
    let s = m.skew();
    Vec3::new(s.0[2][1], s.0[0][2], s.0[1][0])
}

/// `A·B = ½ Tr(A Bᵀ)`.
pub fn half_trace_inner(a: &Mat3, b: &Mat3) -> f64 {
    a.dot(b)
}

/// A special orthogonal matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub const IDENTITY: Rotation = Rotation(Mat3::IDENTITY);

    /// Checks orthogonality and orientation within [`ORTHO_TOL`].
    pub fn new(m: Mat3) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidInput("non-finite rotation entries"));
        }
        if orthogonality_error(&m) > ORTHO_TOL || abs(m.det() - 1.0) > ORTHO_TOL {
            return Err(Error::InvalidInput("matrix is not special orthogonal"));
        }
        Ok(Rotation(m))
    }

    /// Wraps a matrix the caller knows to be a rotation up to rounding.
    pub fn from_matrix_unchecked(m: Mat3) -> Self {
        Rotation(m)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat3 {
        self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn inverse(&self) -> Rotation {
        self.transpose()
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.0 * v
    }

    /// `‖R Rᵀ − I‖_F`, the drift away from the group.
    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.0)
    }

    /// Angle–axis form; see [`AxisAngle::from_rotation`].
    pub fn to_axis_angle(&self) -> AxisAngle {
        AxisAngle::from_rotation(self)
    }

    /// Rotation angle in `[0, π]`, equal to the geodesic distance to `I₃`.
    pub fn angle(&self) -> f64 {
        let s = vee(&self.0).norm();
        let c = 0.5 * (self.0.trace() - 1.0);
        atan2(s, c)
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, o: Rotation) -> Rotation {
        Rotation(self.0 * o.0)
    }
}

impl Mul<Mat3> for Rotation {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        self.0 * o
    }
}

impl Mul<Rotation> for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Rotation) -> Mat3 {
        self * o.0
    }
}

fn orthogonality_error(m: &Mat3) -> f64 {
    (*m * m.transpose() - Mat3::IDENTITY).frobenius()
}

/// Rotation of angle `theta ∈ [0, π]` about the unit vector `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    theta: f64,
    axis: Vec3,
}

impl AxisAngle {
    pub fn new(theta: f64, axis: Vec3) -> Result<Self> {
        if !(0.0..=core::f64::consts::PI).contains(&theta) {
            return Err(Error::Domain {
                what: "rotation angle",
                value: theta,
                domain: "[0, π]",
            });
        }
        if !axis.is_finite() || abs(axis.norm() - 1.0) > 1e-12 {
            return Err(Error::InvalidInput("axis must be a unit vector"));
        }
        Ok(AxisAngle { theta, axis })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    /// Extracts the angle and axis of a rotation.
    ///
    /// The angle is `atan2(|vee(R)|, (Tr R − 1)/2)`, accurate at both ends of
    /// `[0, π]`. For angles above π/2 the axis is read off the symmetric part
    /// `(1 − cos θ) n nᵀ`, otherwise off the antisymmetric part. At `θ = 0`
    /// the axis is `e₁`; at `θ = π` the two admissible axes are
    /// disambiguated by making the first nonzero component positive.
    pub fn from_rotation(r: &Rotation) -> Self {
        let m = r.matrix();
        let w = vee(m);
        let s = w.norm();
        let c = 0.5 * (m.trace() - 1.0);
        let theta = atan2(s, c);
        let axis = if c >= 0.0 {
            if s == 0.0 {
                Vec3::basis(0)
            } else {
                w.scale(1.0 / s)
            }
        } else {
            let b = m.sym() - Mat3::IDENTITY.scale(c);
            let diag = b.diagonal();
            let k = (0..3)
                .max_by(|&i, &j| diag[i].total_cmp(&diag[j]))
                .unwrap_or(0);
            let col = b.col(k);
            let mut n = col.scale(1.0 / col.norm());
            let sign = n.dot(w);
            if sign < 0.0 || (sign == 0.0 && !first_nonzero_positive(n)) {
                n = -n;
            }
            n
        };
        AxisAngle { theta, axis }
    }
}

fn first_nonzero_positive(n: Vec3) -> bool {
    for v in n.to_array() {
        if abs(v) > 1e-12 {
            return v > 0.0;
        }
    }
    true
}

/// `R(θ, n) = cos θ I + sin θ [n]× + (1 − cos θ) n nᵀ`.
pub fn rodrigues(aa: &AxisAngle) -> Rotation {
    let (st, ct) = (sin(aa.theta), cos(aa.theta));
    let n = aa.axis;
    Rotation(Mat3::IDENTITY.scale(ct) + hat(n).scale(st) + n.outer(n).scale(1.0 - ct))
}

/// `exp([ω]×)` for an arbitrary rotation vector `ω`, with a series branch for
/// tiny angles.
pub fn exp_so3(omega: Vec3) -> Rotation {
    let theta2 = omega.dot(omega);
    let theta = sqrt(theta2);
    let (a, b) = if theta < 1e-4 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (sin(theta) / theta, (1.0 - cos(theta)) / theta2)
    };
    let k = hat(omega);
    Rotation(Mat3::IDENTITY + k.scale(a) + (k * k).scale(b))
}

/// Orthogonal projection of `h` on the tangent space at `a`:
/// `½ (h − a hᵀ a)`.
pub fn tangent_project(a: &Rotation, h: &Mat3) -> Mat3 {
    let a = a.matrix();
    (*h - *a * h.transpose() * *a).scale(0.5)
}

/// Haar-uniform rotation: a normalized 4-D standard Gaussian is a uniform
/// unit quaternion, and the double cover pushes it to the Haar measure.
pub fn haar_sample<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    phi_map(&UnitQuaternion::sample_uniform(rng))
}

/// `J = P · diag(d) · Q` with `P, Q ∈ SO(3)` and `d₁ ≥ d₂ ≥ |d₃|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ssvd {
    pub p: Rotation,
    pub d: Vec3,
    pub q: Rotation,
}

impl Ssvd {
    pub fn reconstruct(&self) -> Mat3 {
        self.p * Mat3::diag(self.d) * self.q
    }
}

/// Special singular value decomposition.
///
/// An ordinary SVD `U Σ Vᵀ` from one-sided Jacobi sweeps is made special
/// orthogonal by moving the signs of `det U` and `det V` onto the smallest
/// singular value. Singular values below `64 ε σ₁` are flushed to zero so
/// that rank-deficient inputs give exact zeros.
pub fn ssvd(j: &Mat3) -> Result<Ssvd> {
    if !j.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix"));
    }
    let mut w = *j;
    let mut v = Mat3::IDENTITY;
    for _sweep in 0..60 {
        let mut rotated = false;
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let cp = w.col(p);
            let cq = w.col(q);
            let alpha = cp.dot(cp);
            let beta = cq.dot(cq);
            let gamma = cp.dot(cq);
            if gamma == 0.0 || abs(gamma) <= 1e-15 * sqrt(alpha * beta) {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (abs(zeta) + sqrt(1.0 + zeta * zeta));
            let c = 1.0 / sqrt(1.0 + t * t);
            let s = c * t;
            for m in [&mut w, &mut v] {
                for k in 0..3 {
                    let a = m.0[k][p];
                    let b = m.0[k][q];
                    m.0[k][p] = c * a - s * b;
                    m.0[k][q] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma = [w.col(0).norm(), w.col(1).norm(), w.col(2).norm()];
    let mut idx = [0usize, 1, 2];
    idx.sort_unstable_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let s0 = sigma[idx[0]];
    let flush = 64.0 * f64::EPSILON * s0;

    let u1 = if s0 > 0.0 {
        w.col(idx[0]).scale(1.0 / s0)
    } else {
        Vec3::basis(0)
    };
    let mut d1 = sigma[idx[1]];
    let u2 = if d1 > flush && d1 > 0.0 {
        let raw = w.col(idx[1]).scale(1.0 / d1);
        let g = raw - u1.scale(u1.dot(raw));
        g.scale(1.0 / g.norm())
    } else {
        d1 = 0.0;
        any_orthogonal(u1)
    };
    let u3 = u1.cross(u2);
    let mut d2 = if sigma[idx[2]] > flush {
        u3.dot(w.col(idx[2]))
    } else {
        0.0
    };

    let mut vp = Mat3::from_cols(v.col(idx[0]), v.col(idx[1]), v.col(idx[2]));
    if vp.det() < 0.0 {
        for row in vp.0.iter_mut() {
            row[2] = -row[2];
        }
        d2 = -d2;
    }
    Ok(Ssvd {
        p: Rotation(Mat3::from_cols(u1, u2, u3)),
        d: Vec3::new(s0, d1, d2),
        q: Rotation(vp.transpose()),
    })
}

fn any_orthogonal(u: Vec3) -> Vec3 {
    let k = (0..3)
        .min_by(|&i, &j| abs(u[i]).total_cmp(&abs(u[j])))
        .unwrap_or(0);
    let t = u.cross(Vec3::basis(k));
    t.scale(1.0 / t.norm())
}

/// Closest rotation to `j` in the half-trace norm, `P Q` from the SSVD.
pub fn nearest_rotation(j: &Mat3) -> Result<Rotation> {
    Ok(nearest_rotation_with_distance(j)?.0)
}

/// [`nearest_rotation`] together with the attained distance
/// `‖diag(d) − I₃‖`.
pub fn nearest_rotation_with_distance(j: &Mat3) -> Result<(Rotation, f64)> {
    let s = ssvd(j)?;
    let dist = (Mat3::diag(s.d) - Mat3::IDENTITY).norm();
    Ok((s.p * s.q, dist))
}

/// Projects a drifted rotation back onto SO(3).
pub fn renormalize(m: &Mat3) -> Result<Rotation> {
    nearest_rotation(m)
}
