//! Generalized von Mises laws `M_J(A) = exp(J·A) / 𝒵(J)` on SO(3).
//!
//! Every quantity is reduced to the SSVD diagonal `J = P diag(d) Q`. For a
//! diagonal parameter, `J·Φ(q) = Σ λ_a q_a²` is a Bingham exponent on S³ with
//!
//! ```text
//! λ = ½ (d₁+d₂+d₃, d₁−d₂−d₃, −d₁+d₂−d₃, −d₁−d₂+d₃)
//! ```
//!
//! and the Haar measure becomes the uniform measure on S³. In Hopf
//! coordinates `q = (√t cos ξ₁, √t sin ξ₁, √(1−t) cos ξ₂, √(1−t) sin ξ₂)`
//! the uniform measure is `dt dξ₁ dξ₂ / 4π²` and the exponent separates into
//! `t(λ̄₁ + δ₁ cos 2ξ₁) + (1−t)(λ̄₂ + δ₂ cos 2ξ₂)`. The `t` integral uses
//! Gauss–Legendre nodes and the angular averages use Gauss–Chebyshev nodes in
//! `u = cos 2ξ`, paired as `±u` so that odd moments vanish exactly whenever
//! `δ = 0`.

use alloc::vec::Vec;

use rand::Rng;

use crate::linalg::{tree_sum, Mat3, Vec3};
use crate::math::{cos, exp, log};
use crate::numerics::gauss_legendre;
use crate::quaternion::{iso_phi, UnitQuaternion};
use crate::so3::{ssvd, Rotation, Ssvd};
use crate::{Error, Result};

/// Largest half-trace norm of `J` accepted by the moment quadrature.
pub const ENVELOPE: f64 = 50.0;
/// Smallest acceptance rate tolerated by the rejection sampler.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

const BASE_NODES: usize = 64;
const MAX_NODES: usize = 1024;
const REL_TOL: f64 = 1e-10;

/// Signs of `q_a²` in the diagonal entries of `Φ(q)`.
pub const DIAG_SIGNS: [[f64; 4]; 3] = [
    [1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, 1.0, -1.0],
    [1.0, -1.0, -1.0, 1.0],
];

/// Bingham weights `λ` of the diagonal parameter `d`.
pub fn bingham_weights(d: Vec3) -> [f64; 4] {
    [
        0.5 * (d.x + d.y + d.z),
        0.5 * (d.x - d.y - d.z),
        0.5 * (-d.x + d.y - d.z),
        0.5 * (-d.x - d.y + d.z),
    ]
}

/// Moments of the Bingham law `∝ exp(Σ λ_a q_a²)` attached to a diagonal `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalMoments {
    /// `ln 𝒵(diag d)`.
    pub log_z: f64,
    /// `E[q_a²]`.
    pub m2: [f64; 4],
    /// `E[q_a² q_b²]`.
    pub m4: [[f64; 4]; 4],
    /// Diagonal of `𝒥[M_J]`.
    pub flux: Vec3,
    /// Gauss–Legendre node count that met the tolerance.
    pub nodes: usize,
}

impl DiagonalMoments {
    /// `Cov(A_kk, A_ll)` under `M_{diag d}`.
    pub fn diag_covariance(&self) -> [[f64; 3]; 3] {
        let mut c = [[0.0; 3]; 3];
        for k in 0..3 {
            for l in 0..3 {
                let mut s = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        s += DIAG_SIGNS[k][a] * DIAG_SIGNS[l][b] * self.m4[a][b];
                    }
                }
                c[k][l] = s - self.flux[k] * self.flux[l];
            }
        }
        c
    }

    /// `E[(A·H)²]` for `A ~ M_{diag d}`.
    pub fn second_moment(&self, h: &Mat3) -> f64 {
        let t = iso_phi(h);
        let mut s = 0.0;
        for a in 0..4 {
            let taa = t.get(a, a);
            s += taa * taa * self.m4[a][a];
            for b in 0..4 {
                if a != b {
                    let tab = t.get(a, b);
                    s += (taa * t.get(b, b) + 2.0 * tab * tab) * self.m4[a][b];
                }
            }
        }
        4.0 * s
    }
}

struct Level {
    /// `(t, 1 − t, weight)`, with `1 − t` taken from the mirrored node so
    /// that the rule is exactly symmetric under `t ↦ 1 − t`.
    t: Vec<(f64, f64, f64)>,
    u: Vec<f64>,
}

impl Level {
    fn new(n: usize) -> Self {
        // positive half of the Chebyshev nodes cos((2k−1)π/2n)
        let u = (0..n / 2)
            .map(|k| cos((2 * k + 1) as f64 * core::f64::consts::PI / (2 * n) as f64))
            .collect();
        let gl = gauss_legendre(n);
        let t = (0..n).map(|i| (gl[i].0, gl[n - 1 - i].0, gl[i].1)).collect();
        Level { t, u }
    }
}

/// Reusable node tables for the S³ moment quadrature.
///
/// Building the tables costs about as much as one moment evaluation, so
/// callers that evaluate many moments (flows, sweeps) should keep one around.
pub struct MomentQuadrature {
    levels: Vec<Level>,
}

impl Default for MomentQuadrature {
    fn default() -> Self {
        Self::new()
    }
}

impl MomentQuadrature {
    pub fn new() -> Self {
        MomentQuadrature {
            levels: alloc::vec![Level::new(BASE_NODES), Level::new(2 * BASE_NODES)],
        }
    }

    /// Moments at `diag(d)`; `d` need not be sorted.
    pub fn moments(&self, d: Vec3) -> Result<DiagonalMoments> {
        check_envelope(Mat3::diag(d).norm())?;
        let lam = bingham_weights(d);
        let mut prev = evaluate(&self.levels[0], lam);
        let mut n = BASE_NODES;
        loop {
            n *= 2;
            let next = match self.levels.iter().find(|l| l.t.len() == n) {
                Some(level) => evaluate(level, lam),
                None => evaluate(&Level::new(n), lam),
            };
            if converged(&prev, &next) {
                return Ok(DiagonalMoments { nodes: n, ..next });
            }
            if n >= MAX_NODES {
                return Err(Error::NonConverged("von Mises moment quadrature"));
            }
            prev = next;
        }
    }
}

fn check_envelope(norm: f64) -> Result<()> {
    if !norm.is_finite() {
        return Err(Error::InvalidInput("non-finite parameter"));
    }
    if norm > ENVELOPE {
        return Err(Error::OutOfRange { norm, limit: ENVELOPE });
    }
    Ok(())
}

fn converged(a: &DiagonalMoments, b: &DiagonalMoments) -> bool {
    let mut diff = (a.log_z - b.log_z).abs() / b.log_z.abs().max(1.0);
    for i in 0..4 {
        diff = diff.max((a.m2[i] - b.m2[i]).abs());
        for j in 0..4 {
            diff = diff.max((a.m4[i][j] - b.m4[i][j]).abs());
        }
    }
    diff < REL_TOL
}

/// Angular averages `⟨u^k e^{s(λ̄ + δu) − s m}⟩` for `k = 0, 1, 2`.
#[inline]
fn angular(us: &[f64], s: f64, base: f64, delta: f64) -> [f64; 3] {
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    let e0 = s * base;
    for &u in us {
        let ep = exp(e0 + s * delta * u);
        let em = exp(e0 - s * delta * u);
        m0 += ep + em;
        m1 += u * (ep - em);
        m2 += u * u * (ep + em);
    }
    let n = (2 * us.len()) as f64;
    [m0 / n, m1 / n, m2 / n]
}

fn evaluate(level: &Level, lam: [f64; 4]) -> DiagonalMoments {
    let m = lam.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (b1, d1) = (0.5 * (lam[0] + lam[1]) - m, 0.5 * (lam[0] - lam[1]));
    let (b2, d2) = (0.5 * (lam[2] + lam[3]) - m, 0.5 * (lam[2] - lam[3]));

    let mut z = 0.0;
    let mut t1 = [0.0; 2];
    let mut t2 = [0.0; 2];
    let mut q1 = [0.0; 3];
    let mut q2 = [0.0; 3];
    let mut x = [[0.0; 2]; 2];
    for &(t, s, w) in &level.t {
        let mm = angular(&level.u, t, b1, d1);
        let nn = angular(&level.u, s, b2, d2);
        z += w * mm[0] * nn[0];
        for k in 0..2 {
            t1[k] += w * t * mm[k] * nn[0];
            t2[k] += w * s * mm[0] * nn[k];
        }
        for k in 0..3 {
            q1[k] += w * t * t * mm[k] * nn[0];
            q2[k] += w * s * s * mm[0] * nn[k];
        }
        for j in 0..2 {
            for k in 0..2 {
                x[j][k] += w * t * s * mm[j] * nn[k];
            }
        }
    }

    let m2 = [
        0.5 * (t1[0] + t1[1]) / z,
        0.5 * (t1[0] - t1[1]) / z,
        0.5 * (t2[0] + t2[1]) / z,
        0.5 * (t2[0] - t2[1]) / z,
    ];
    let mut m4 = [[0.0; 4]; 4];
    m4[0][0] = 0.25 * (q1[0] + 2.0 * q1[1] + q1[2]) / z;
    m4[1][1] = 0.25 * (q1[0] - 2.0 * q1[1] + q1[2]) / z;
    m4[0][1] = 0.25 * (q1[0] - q1[2]) / z;
    m4[2][2] = 0.25 * (q2[0] + 2.0 * q2[1] + q2[2]) / z;
    m4[3][3] = 0.25 * (q2[0] - 2.0 * q2[1] + q2[2]) / z;
    m4[2][3] = 0.25 * (q2[0] - q2[2]) / z;
    m4[0][2] = 0.25 * (x[0][0] + x[0][1] + x[1][0] + x[1][1]) / z;
    m4[0][3] = 0.25 * (x[0][0] - x[0][1] + x[1][0] - x[1][1]) / z;
    m4[1][2] = 0.25 * (x[0][0] + x[0][1] - x[1][0] - x[1][1]) / z;
    m4[1][3] = 0.25 * (x[0][0] - x[0][1] - x[1][0] + x[1][1]) / z;
    for a in 0..4 {
        for b in 0..a {
            m4[a][b] = m4[b][a];
        }
    }

    // symmetric assembly keeps exact zeros when δ₁ = δ₂ = 0
    let a = t1[1] / z;
    let b = t2[1] / z;
    let s1 = t1[0] / z;
    let s2 = t2[0] / z;
    DiagonalMoments {
        log_z: log(z) + m,
        m2,
        m4,
        flux: Vec3::new(s1 - s2, a + b, a - b),
        nodes: level.t.len(),
    }
}

/// Moments at `diag(d)` with freshly built node tables.
pub fn diagonal_moments(d: Vec3) -> Result<DiagonalMoments> {
    MomentQuadrature::new().moments(d)
}

/// Flux and second-moment data of `M_J` for a general `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    /// `𝒥[M_J] = ∫ A M_J(A) dA`.
    pub flux: Mat3,
    pub ssvd: Ssvd,
    pub diagonal: DiagonalMoments,
}

impl MomentReport {
    /// `∫ (A·H)² M_J(A) dA`.
    pub fn second_moment(&self, h: &Mat3) -> f64 {
        let hp = self.ssvd.p.transpose() * *h * self.ssvd.q.transpose();
        self.diagonal.second_moment(&hp)
    }

    /// `∫ (A·H)(A·K) M_J(A) dA`, by polarization.
    pub fn second_moment_bilinear(&self, h: &Mat3, k: &Mat3) -> f64 {
        0.25 * (self.second_moment(&(*h + *k)) - self.second_moment(&(*h - *k)))
    }
}

/// A von Mises law with its SSVD and normalization cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMises {
    j: Mat3,
    report: MomentReport,
}

impl VonMises {
    pub fn new(j: Mat3) -> Result<Self> {
        Self::with_quadrature(j, &MomentQuadrature::new())
    }

    pub fn with_quadrature(j: Mat3, quad: &MomentQuadrature) -> Result<Self> {
        check_envelope(j.norm())?;
        let s = ssvd(&j)?;
        let diagonal = quad.moments(s.d)?;
        let flux = s.p * Mat3::diag(diagonal.flux) * s.q;
        Ok(VonMises { j, report: MomentReport { flux, ssvd: s, diagonal } })
    }

    pub fn j(&self) -> &Mat3 {
        &self.j
    }

    pub fn ssvd(&self) -> &Ssvd {
        &self.report.ssvd
    }

    pub fn log_z(&self) -> f64 {
        self.report.diagonal.log_z
    }

    pub fn report(&self) -> &MomentReport {
        &self.report
    }

    pub fn flux(&self) -> Mat3 {
        self.report.flux
    }

    pub fn second_moment(&self, h: &Mat3) -> f64 {
        self.report.second_moment(h)
    }

    pub fn log_density(&self, a: &Rotation) -> f64 {
        self.j.dot(a.matrix()) - self.log_z()
    }

    pub fn density(&self, a: &Rotation) -> f64 {
        exp(self.log_density(a))
    }

    /// `max_{SO(3)} J·A = ½(d₁ + d₂ + d₃)`, attained at the nearest rotation.
    pub fn max_exponent(&self) -> f64 {
        let d = self.report.ssvd.d;
        0.5 * (d.x + d.y + d.z)
    }

    /// Expected acceptance rate `𝒵(J) e^{−max J·A}` of [`VonMises::sample`].
    pub fn acceptance_rate(&self) -> f64 {
        exp(self.log_z() - self.max_exponent())
    }

    /// Exact sample by rejection from the Haar measure.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Rotation> {
        Ok(self.sample_counting(rng)?.0)
    }

    /// [`VonMises::sample`] that also reports how many proposals were drawn.
    pub fn sample_counting<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Rotation, u64)> {
        let rate = self.acceptance_rate();
        if rate < MIN_ACCEPTANCE {
            return Err(Error::Envelope { rate });
        }
        let lam = bingham_weights(self.report.ssvd.d);
        let top = lam.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut attempts = 0;
        loop {
            attempts += 1;
            let q = UnitQuaternion::sample_uniform(rng);
            let v = q.to_array();
            let e: f64 = (0..4).map(|a| lam[a] * v[a] * v[a]).sum::<f64>() - top;
            if rng.random::<f64>() < exp(e) {
                let a = crate::quaternion::phi_map(&q);
                let s = &self.report.ssvd;
                return Ok((Rotation::from_matrix_unchecked(s.p * *a.matrix() * s.q), attempts));
            }
        }
    }
}

/// `ln 𝒵(J)`, the log of the Haar integral of `exp(J·A)`.
pub fn log_partition(j: &Mat3) -> Result<f64> {
    check_envelope(j.norm())?;
    Ok(diagonal_moments(ssvd(j)?.d)?.log_z)
}

/// `𝒥[M_J]`.
pub fn mean_flux(j: &Mat3) -> Result<Mat3> {
    Ok(VonMises::new(*j)?.flux())
}

/// `∫ (A·H)² M_J(A) dA`.
pub fn second_moment(j: &Mat3, h: &Mat3) -> Result<f64> {
    Ok(VonMises::new(*j)?.second_moment(h))
}

/// `𝒥[M_J]` and the second-moment form together.
pub fn moment_report(j: &Mat3) -> Result<MomentReport> {
    Ok(*VonMises::new(*j)?.report())
}

/// `(1/N) Σ A_k`, summed pairwise.
pub fn empirical_flux(ensemble: &[Rotation]) -> Result<Mat3> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let ms: Vec<Mat3> = ensemble.iter().map(|r| *r.matrix()).collect();
    Ok(tree_sum(&ms).scale(1.0 / ensemble.len() as f64))
}

/// `ℋ(ρM_{J₁} | ρM_{J₂}) = ρ [𝒥[M_{J₁}]·(J₁ − J₂) + ln 𝒵(J₂) − ln 𝒵(J₁)]`.
pub fn kl_von_mises(rho: f64, j1: &Mat3, j2: &Mat3) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain { what: "rho", value: rho, domain: "(0, ∞)" });
    }
    let m1 = VonMises::new(*j1)?;
    let lz2 = log_partition(j2)?;
    let kl = rho * (m1.flux().dot(&(*j1 - *j2)) + lz2 - m1.log_z());
    Ok(kl.max(0.0))
}
