//! Steady states of the BGK/Fokker–Planck flux dynamics.
//!
//! Nonzero solutions of `J = ρ𝒥[M_J]` come in three scalar families:
//! `J = αA₀` with `α = ρc₁(α)` (the axial branches α₁↑ and α₁↓) and
//! `J = α√3 a₀⊗b₀` with `α = ρc₂(α)` (the rank-one branch α₂). This module
//! evaluates `c₁`, `c₂`, the thresholds `ρ*` and `ρ_c = 6`, the potential
//! `V(J) = ½‖J‖² − ρ ln 𝒵(J)`, its Hessian restricted to diagonal matrices and
//! the free-energy surrogate `W`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::linalg::{sym_eigen, Mat3, Vec3};
use crate::math::{cos, exp, log, sin, sqrt};
use crate::numerics::{brent_root, golden_section_min, integrate_adaptive};
use crate::so3::Rotation;
use crate::von_mises::{diagonal_moments, log_partition, mean_flux};
use crate::{Error, Result};

/// Critical density where the uniform state loses stability.
pub const RHO_C: f64 = 6.0;
/// Largest `|α|` accepted by `c₁`, `c₂` and the branch solvers.
pub const ALPHA_MAX: f64 = 50.0;
/// Relative tolerance of the 1-D integrals.
pub const INTEGRAL_TOL: f64 = 1e-12;
/// Tolerance on `α` for branch roots.
pub const ROOT_TOL: f64 = 1e-12;
/// Tolerance of the golden-section search for `α*`.
pub const ARGMIN_TOL: f64 = 1e-10;

const SERIES_CUTOFF: f64 = 1e-6;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.abs() <= ALPHA_MAX) {
        return Err(Error::Domain { what: "alpha", value: alpha, domain: "[-50, 50]" });
    }
    Ok(())
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain { what: "rho", value: rho, domain: "(0, ∞)" });
    }
    Ok(())
}

fn ratio<F, G>(num: F, den: G, a: f64, b: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    G: FnMut(f64) -> f64,
{
    let n = integrate_adaptive(num, a, b, INTEGRAL_TOL, 0.0)?;
    let d = integrate_adaptive(den, a, b, INTEGRAL_TOL, 0.0)?;
    Ok(n.value / d.value)
}

/// `c₁(α)`: the coefficient in `𝒥[M_{αA₀}] = c₁(α) A₀`.
///
/// Ratio over the rotation angle `θ` of the weights
/// `⅓(2cos θ + 1) sin²(θ/2) e^{α cos θ}` and `sin²(θ/2) e^{α cos θ}`.
pub fn c1(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha.abs() < SERIES_CUTOFF {
        return Ok(alpha / 6.0 + alpha * alpha / 24.0);
    }
    let shift = alpha.abs();
    let w = move |t: f64| {
        let s = sin(0.5 * t);
        s * s * exp(alpha * cos(t) - shift)
    };
    ratio(move |t| (2.0 * cos(t) + 1.0) / 3.0 * w(t), w, 0.0, core::f64::consts::PI)
}

/// `c₂(α)`: the coefficient of the rank-one branch `J = α√3 a₀⊗b₀`.
pub fn c2(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha.abs() < SERIES_CUTOFF {
        return Ok(alpha / 6.0);
    }
    let k = 0.5 * sqrt(3.0) * alpha;
    let shift = k.abs();
    let w = move |p: f64| sin(p) * exp(k * cos(p) - shift);
    Ok(ratio(move |p| cos(p) * w(p), w, 0.0, core::f64::consts::PI)? / sqrt(3.0))
}

/// `ρ₁(α) = α / c₁(α)`, extended by continuity to `ρ₁(0) = 6`.
pub fn rho1(alpha: f64) -> Result<f64> {
    if alpha.abs() < SERIES_CUTOFF {
        return Ok(RHO_C / (1.0 + alpha / 4.0));
    }
    Ok(alpha / c1(alpha)?)
}

/// `ρ₂(α) = α / c₂(α)`, extended by continuity to `ρ₂(0) = 6`.
pub fn rho2(alpha: f64) -> Result<f64> {
    if alpha.abs() < SERIES_CUTOFF {
        return Ok(RHO_C * (1.0 + alpha * alpha / 20.0));
    }
    Ok(alpha / c2(alpha)?)
}

/// Nonzero steady-state families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    AxialUp,
    AxialDown,
    Rank1,
}

/// Threshold values and branch solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchTables {
    pub alpha_star: f64,
    pub rho_star: f64,
    pub c_star: f64,
    pub rho_c: f64,
}

/// Locates `α* = argmin ρ₁` by golden-section search on `(0, 50]`.
pub fn find_thresholds() -> Result<BranchTables> {
    let mut err = None;
    let (alpha_star, rho_star) = golden_section_min(
        |a| match rho1(a) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        1e-3,
        ALPHA_MAX,
        ARGMIN_TOL,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(BranchTables {
        alpha_star,
        rho_star,
        c_star: c1(alpha_star)?,
        rho_c: RHO_C,
    })
}

impl BranchTables {
    /// The signed branch parameter `α` at density `rho`.
    ///
    /// `AxialDown` roots are positive for `ρ* < ρ < ρ_c`, zero at `ρ_c` and
    /// negative beyond.
    pub fn solve(&self, branch: Branch, rho: f64) -> Result<f64> {
        check_rho(rho)?;
        let f1 = |a: f64| rho1(a).map(|r| r - rho).unwrap_or(f64::NAN);
        match branch {
            Branch::AxialUp | Branch::AxialDown => {
                if rho < self.rho_star {
                    return Err(Error::Domain { what: "rho", value: rho, domain: "[ρ*, ∞) for axial branches" });
                }
                if rho == self.rho_star {
                    return Ok(self.alpha_star);
                }
                if branch == Branch::AxialDown && rho == RHO_C {
                    return Ok(0.0);
                }
                let (a, b) = match branch {
                    Branch::AxialUp => (self.alpha_star, ALPHA_MAX),
                    _ => (-ALPHA_MAX, self.alpha_star),
                };
                brent_root(f1, a, b, ROOT_TOL)
            }
            Branch::Rank1 => {
                if rho < RHO_C {
                    return Err(Error::Domain { what: "rho", value: rho, domain: "[6, ∞) for the rank-one branch" });
                }
                if rho == RHO_C {
                    return Ok(0.0);
                }
                brent_root(|a| rho2(a).map(|r| r - rho).unwrap_or(f64::NAN), 0.0, ALPHA_MAX, ROOT_TOL)
            }
        }
    }

    /// Order parameter `c̃(ρ) = c(α(ρ))` of a branch (signed for `c̃₁↓`).
    pub fn branch_c(&self, branch: Branch, rho: f64) -> Result<f64> {
        let a = self.solve(branch, rho)?;
        match branch {
            Branch::Rank1 => c2(a),
            _ => c1(a),
        }
    }
}

/// [`BranchTables::solve`] with freshly computed thresholds.
pub fn solve_branch(branch: Branch, rho: f64) -> Result<f64> {
    find_thresholds()?.solve(branch, rho)
}

/// `V(J) = ½‖J‖² − ρ ln 𝒵(J)`.
pub fn potential_v(rho: f64, j: &Mat3) -> Result<f64> {
    Ok(0.5 * j.dot(j) - rho * log_partition(j)?)
}

/// `∇V(J) = J − ρ𝒥[M_J]`.
pub fn gradient_v(rho: f64, j: &Mat3) -> Result<Mat3> {
    Ok(*j - mean_flux(j)?.scale(rho))
}

/// `V̄(d) = V(diag d)`.
pub fn potential_vbar(rho: f64, d: Vec3) -> Result<f64> {
    Ok(0.25 * d.dot(d) - rho * diagonal_moments(d)?.log_z)
}

/// Hessian of `V` restricted to diagonal matrices at `diag(d)`, as the
/// bilinear form `B_kl = Hess V(E_kk, E_ll)`:
///
/// ```text
/// B_kl = ½ δ_kl − (ρ/4) Cov(A_kk, A_ll)
/// ```
///
/// The half-trace Gram matrix of `E_11, E_22, E_33` is `½ I`, so the
/// eigenvalues of the Hessian as an operator are those of `2B`.
pub fn hessian_vbar(rho: f64, d: Vec3) -> Result<Mat3> {
    let cov = diagonal_moments(d)?.diag_covariance();
    Ok(Mat3::from_fn(|k, l| {
        let delta = if k == l { 0.5 } else { 0.0 };
        delta - 0.25 * rho * cov[k][l]
    }))
}

/// Operator eigenvalues of the diagonal Hessian, radial direction first.
///
/// The radial eigenvalue belongs to the eigenvector most aligned with `d`;
/// the other two follow in descending order. At `d = 0` all three are
/// sorted in descending order.
pub fn hessian_eigenvalues(rho: f64, d: Vec3) -> Result<[f64; 3]> {
    let b = hessian_vbar(rho, d)?;
    let (vals, vecs) = sym_eigen(&b.scale(2.0));
    let mut idx: Vec<usize> = (0..3).rev().collect();
    let n = d.norm();
    if n > 0.0 {
        let dir = d.scale(1.0 / n);
        let radial = (0..3)
            .max_by(|&i, &j| vecs.col(i).dot(dir).abs().total_cmp(&vecs.col(j).dot(dir).abs()))
            .unwrap_or(0);
        idx.retain(|&i| i != radial);
        idx.insert(0, radial);
    }
    Ok([vals[idx[0]], vals[idx[1]], vals[idx[2]]])
}

/// Local frame of a steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    None,
    /// `A₀` of an axial state `J = αA₀`.
    Rotation(Rotation),
    /// `(a₀, b₀)` of a rank-one state `J = α√3 a₀⊗b₀`.
    Pair(Vec3, Vec3),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassTag {
    Uniform,
    AxialUp,
    AxialDown,
    Rank1,
}

impl ClassTag {
    pub fn name(&self) -> &'static str {
        match self {
            ClassTag::Uniform => "Uniform",
            ClassTag::AxialUp => "AxialUp",
            ClassTag::AxialDown => "AxialDown",
            ClassTag::Rank1 => "Rank1",
        }
    }
}

/// A steady state: its family, branch parameter and frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumClass {
    pub tag: ClassTag,
    pub alpha: f64,
    pub frame: Frame,
}

impl EquilibriumClass {
    pub fn uniform() -> Self {
        EquilibriumClass { tag: ClassTag::Uniform, alpha: 0.0, frame: Frame::None }
    }

    /// Representative of a branch in the canonical frame. Negative `α` on the
    /// down branch uses `A₀ = diag(−1, −1, 1)` so the diagonal stays ordered.
    pub fn canonical(branch: Branch, alpha: f64) -> Self {
        match branch {
            Branch::AxialUp => EquilibriumClass {
                tag: ClassTag::AxialUp,
                alpha,
                frame: Frame::Rotation(Rotation::IDENTITY),
            },
            Branch::AxialDown => {
                let a0 = if alpha < 0.0 {
                    Rotation::from_matrix_unchecked(Mat3::diag(Vec3::new(-1.0, -1.0, 1.0)))
                } else {
                    Rotation::IDENTITY
                };
                EquilibriumClass { tag: ClassTag::AxialDown, alpha, frame: Frame::Rotation(a0) }
            }
            Branch::Rank1 => EquilibriumClass {
                tag: ClassTag::Rank1,
                alpha,
                frame: Frame::Pair(Vec3::basis(0), Vec3::basis(0)),
            },
        }
    }

    /// The flux matrix `J` of the state.
    pub fn j(&self) -> Mat3 {
        match self.frame {
            Frame::None => Mat3::ZERO,
            Frame::Rotation(a0) => a0.matrix().scale(self.alpha),
            Frame::Pair(a, b) => a.outer(b).scale(self.alpha * sqrt(3.0)),
        }
    }

    /// SSVD diagonal of the canonical representative.
    pub fn canonical_diagonal(&self) -> Vec3 {
        let a = self.alpha;
        match self.tag {
            ClassTag::Uniform => Vec3::ZERO,
            ClassTag::AxialUp | ClassTag::AxialDown if a >= 0.0 => Vec3::new(a, a, a),
            ClassTag::AxialUp | ClassTag::AxialDown => Vec3::new(-a, -a, a),
            ClassTag::Rank1 => Vec3::new(sqrt(3.0) * a, 0.0, 0.0),
        }
    }

    /// `|α| / ρ`.
    pub fn order_parameter(&self, rho: f64) -> f64 {
        self.alpha.abs() / rho
    }
}

/// Hessian data at the canonical point of a steady state.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureReport {
    pub point: Mat3,
    pub eigenvalues: [f64; 3],
    /// Signs of the eigenvalues, e.g. `"+--"`.
    pub signature: String,
    pub is_local_min: bool,
}

fn sign_string(ev: &[f64; 3]) -> String {
    ev.iter().map(|&v| if v > 0.0 { '+' } else { '-' }).collect()
}

/// Signature of the diagonal Hessian at the canonical point of `eq`.
pub fn signature_report(rho: f64, eq: &EquilibriumClass) -> Result<SignatureReport> {
    check_rho(rho)?;
    let d = eq.canonical_diagonal();
    let residual = (d - diagonal_moments(d)?.flux.scale(rho)).norm();
    if residual > 1e-6 {
        return Err(Error::Domain {
            what: "compatibility residual",
            value: residual,
            domain: "< 1e-6 (state does not exist at this rho)",
        });
    }
    let ev = hessian_eigenvalues(rho, d)?;
    Ok(SignatureReport {
        point: Mat3::diag(d),
        eigenvalues: ev,
        signature: sign_string(&ev),
        is_local_min: ev.iter().all(|&v| v > 0.0),
    })
}

/// `W(J) = V(J) − ½‖∇V(J)‖² + ρ ln ρ`, the free energy of `ρM_J`.
pub fn free_energy_w(rho: f64, j: &Mat3) -> Result<f64> {
    check_rho(rho)?;
    let g = gradient_v(rho, j)?;
    Ok(potential_v(rho, j)? - 0.5 * g.dot(&g) + rho * log(rho))
}

/// A steady state present at some density with its stability verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Classified {
    pub class: EquilibriumClass,
    pub report: SignatureReport,
    pub order_parameter: f64,
    pub stable: bool,
    /// `ρ` sits on a threshold where the state is degenerate.
    pub critical: bool,
}

/// Every steady-state family at `rho` with its canonical representative.
///
/// Stable means strict local minimizer of `V`: the uniform state below `ρ_c`
/// and the up branch above `ρ*`. States at the thresholds themselves are
/// degenerate and labelled unstable.
pub fn classify_all(rho: f64) -> Result<Vec<Classified>> {
    classify_all_with(&find_thresholds()?, rho)
}

pub fn classify_all_with(t: &BranchTables, rho: f64) -> Result<Vec<Classified>> {
    check_rho(rho)?;
    let mut classes = alloc::vec![EquilibriumClass::uniform()];
    if rho >= t.rho_star {
        classes.push(EquilibriumClass::canonical(Branch::AxialUp, t.solve(Branch::AxialUp, rho)?));
        classes.push(EquilibriumClass::canonical(Branch::AxialDown, t.solve(Branch::AxialDown, rho)?));
    }
    if rho > RHO_C {
        classes.push(EquilibriumClass::canonical(Branch::Rank1, t.solve(Branch::Rank1, rho)?));
    }
    let mut out = Vec::with_capacity(classes.len());
    for class in classes {
        let report = signature_report(rho, &class)?;
        let critical = match class.tag {
            ClassTag::Uniform | ClassTag::Rank1 => rho == RHO_C,
            ClassTag::AxialUp => rho == t.rho_star,
            ClassTag::AxialDown => rho == t.rho_star || rho == RHO_C,
        };
        out.push(Classified {
            stable: report.is_local_min && !critical,
            order_parameter: class.order_parameter(rho),
            class,
            report,
            critical,
        });
    }
    Ok(out)
}
