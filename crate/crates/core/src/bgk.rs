//! The closed flux dynamics `dJ/dt = ρ𝒥[M_J] − J`.
//!
//! The flow preserves the SSVD frames `P, Q` of `J`, so it reduces to the
//! diagonal `d`:
//!
//! ```text
//! ḋ = ρ f(d) − d,   f(d) = diag 𝒥[M_{diag d}]
//! ```
//!
//! With `V̄(d) = V(diag d) = ¼|d|² − ρ ln 𝒵(diag d)` this is `ḋ = −2∇_d V̄`,
//! the gradient flow of `V̄` for the half-trace metric (whose Gram matrix on
//! diagonal matrices is `½ I`). Along a trajectory `dV̄/dt = −½|ḋ|²`.

use alloc::vec::Vec;

use crate::equilibrium::{find_thresholds, Branch, BranchTables, ClassTag, EquilibriumClass, Frame, RHO_C};
use crate::linalg::{Mat3, Vec3};
use crate::math::{log, sqrt};
use crate::so3::{ssvd, Rotation};
use crate::stats::linear_fit;
use crate::von_mises::MomentQuadrature;
use crate::{Error, Result};

/// RK4 step.
pub const DT: f64 = 0.01;
/// Stationarity threshold on `|ḋ|`.
pub const RHS_TOL: f64 = 1e-10;
/// Matching tolerance between a limit and a steady state.
pub const MATCH_TOL: f64 = 1e-5;
/// Relative floor under which `V − V∞` is considered rounding noise.
pub const FIT_FLOOR: f64 = 1e-8;

/// `ρ f(d) − d` together with `V̄(d)`.
fn rhs_and_potential(quad: &MomentQuadrature, rho: f64, d: Vec3) -> Result<(Vec3, f64)> {
    let m = quad.moments(d)?;
    Ok((m.flux.scale(rho) - d, 0.25 * d.dot(d) - rho * m.log_z))
}

/// `diag(ρ𝒥[M_{diag d}] − diag d)`.
pub fn bgk_rhs(rho: f64, d: Vec3) -> Result<Vec3> {
    bgk_rhs_with(&MomentQuadrature::new(), rho, d)
}

pub fn bgk_rhs_with(quad: &MomentQuadrature, rho: f64, d: Vec3) -> Result<Vec3> {
    Ok(rhs_and_potential(quad, rho, d)?.0)
}

/// A diagonal trajectory sampled every [`DT`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BgkTrajectory {
    pub times: Vec<f64>,
    pub d_values: Vec<Vec3>,
    /// `V̄` at each stored point.
    pub v_values: Vec<f64>,
    /// `|ḋ|` dropped below [`RHS_TOL`] before `t_max`.
    pub converged: bool,
    /// Largest violation of `d₁ ≥ d₂ ≥ |d₃|` seen along the path.
    pub max_order_violation: f64,
}

impl BgkTrajectory {
    pub fn final_d(&self) -> Vec3 {
        self.d_values.last().copied().unwrap_or(Vec3::ZERO)
    }
}

fn order_violation(d: Vec3) -> f64 {
    (d.y - d.x).max(d.z.abs() - d.y).max(0.0)
}

/// Integrates the diagonal flow from `d0` with classical RK4 until
/// `|ḋ| < 1e-10` or `t_max`.
pub fn integrate(rho: f64, d0: Vec3, t_max: f64) -> Result<BgkTrajectory> {
    integrate_with(&MomentQuadrature::new(), rho, d0, t_max)
}

pub fn integrate_with(quad: &MomentQuadrature, rho: f64, d0: Vec3, t_max: f64) -> Result<BgkTrajectory> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain { what: "rho", value: rho, domain: "(0, ∞)" });
    }
    if order_violation(d0) > 1e-9 {
        return Err(Error::InvalidInput("initial diagonal must satisfy d1 >= d2 >= |d3|"));
    }
    let mut tr = BgkTrajectory::default();
    let mut d = d0;
    let mut t = 0.0;
    let mut n = 0u64;
    loop {
        let (k1, v) = rhs_and_potential(quad, rho, d)?;
        tr.times.push(t);
        tr.d_values.push(d);
        tr.v_values.push(v);
        tr.max_order_violation = tr.max_order_violation.max(order_violation(d));
        if k1.norm() < RHS_TOL {
            tr.converged = true;
            break;
        }
        if t >= t_max {
            break;
        }
        let k2 = bgk_rhs_with(quad, rho, d + k1.scale(0.5 * DT))?;
        let k3 = bgk_rhs_with(quad, rho, d + k2.scale(0.5 * DT))?;
        let k4 = bgk_rhs_with(quad, rho, d + k3.scale(DT))?;
        d = d + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(DT / 6.0);
        n += 1;
        t = n as f64 * DT;
    }
    Ok(tr)
}

/// Outcome of [`classify_limit`].
#[derive(Debug, Clone, PartialEq)]
pub struct LimitClassification {
    /// `None` when the limit matches no steady state within [`MATCH_TOL`].
    pub class: Option<EquilibriumClass>,
    /// `P₀ diag(d∞) Q₀`.
    pub j_inf: Mat3,
    pub d_inf: Vec3,
    /// `ρ` equals `ρ*` or `ρ_c`, where steady states are degenerate.
    pub critical: bool,
    pub trajectory: BgkTrajectory,
}

/// Candidate limits `(tag, α, canonical diagonal)` at `rho`.
pub fn candidate_limits(t: &BranchTables, rho: f64) -> Result<Vec<(ClassTag, f64, Vec3)>> {
    let mut out = alloc::vec![(ClassTag::Uniform, 0.0, Vec3::ZERO)];
    if rho >= t.rho_star {
        let up = t.solve(Branch::AxialUp, rho)?;
        out.push((ClassTag::AxialUp, up, Vec3::new(up, up, up)));
        let dn = t.solve(Branch::AxialDown, rho)?;
        let d = if dn >= 0.0 { Vec3::new(dn, dn, dn) } else { Vec3::new(-dn, -dn, dn) };
        out.push((ClassTag::AxialDown, dn, d));
    }
    if rho >= RHO_C {
        let a2 = t.solve(Branch::Rank1, rho)?;
        out.push((ClassTag::Rank1, a2, Vec3::new(sqrt(3.0) * a2, 0.0, 0.0)));
    }
    Ok(out)
}

/// Flows `j0` to its limit and identifies the steady state reached.
pub fn classify_limit(rho: f64, j0: &Mat3, t_max: f64) -> Result<LimitClassification> {
    classify_limit_with(&find_thresholds()?, &MomentQuadrature::new(), rho, j0, t_max)
}

pub fn classify_limit_with(
    t: &BranchTables,
    quad: &MomentQuadrature,
    rho: f64,
    j0: &Mat3,
    t_max: f64,
) -> Result<LimitClassification> {
    let s = ssvd(j0)?;
    let trajectory = integrate_with(quad, rho, s.d, t_max)?;
    let d_inf = trajectory.final_d();
    let j_inf = s.p * Mat3::diag(d_inf) * s.q;
    let critical = (rho - t.rho_star).abs() < 1e-12 || rho == RHO_C;
    let class = candidate_limits(t, rho)?
        .into_iter()
        .filter(|c| (c.2 - d_inf).norm() < MATCH_TOL)
        .min_by(|a, b| (a.2 - d_inf).norm().total_cmp(&(b.2 - d_inf).norm()))
        .map(|(tag, alpha, _)| {
            let frame = match tag {
                ClassTag::Uniform => Frame::None,
                ClassTag::Rank1 => Frame::Pair(s.p.apply(Vec3::basis(0)), s.q.transpose().apply(Vec3::basis(0))),
                _ => {
                    let flip = if alpha < 0.0 { Vec3::new(-1.0, -1.0, 1.0) } else { Vec3::new(1.0, 1.0, 1.0) };
                    Frame::Rotation(Rotation::from_matrix_unchecked(s.p * Mat3::diag(flip) * s.q))
                }
            };
            EquilibriumClass { tag, alpha, frame }
        });
    Ok(LimitClassification { class, j_inf, d_inf, critical, trajectory })
}

/// Exponential rate `λ̂` of `V(t) − V∞ ∝ e^{−λ̂ t}` on a converged trajectory.
///
/// `V∞` is the last stored value. The fit uses the decade of `V − V∞` just
/// above the floor `1e-8 · max(1, |V∞|)`, where the linearized regime holds
/// and rounding is still negligible.
pub fn decay_rate_fit(tr: &BgkTrajectory) -> Result<f64> {
    if !tr.converged {
        return Err(Error::Fit("trajectory did not converge"));
    }
    let v_inf = *tr.v_values.last().ok_or(Error::Fit("empty trajectory"))?;
    let floor = FIT_FLOOR * v_inf.abs().max(1.0);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut last = f64::INFINITY;
    for (&t, &v) in tr.times.iter().zip(&tr.v_values) {
        let gap = v - v_inf;
        if gap > floor && gap <= 10.0 * floor {
            if gap > last {
                return Err(Error::Fit("potential is not monotone in the fit window"));
            }
            last = gap;
            xs.push(t);
            ys.push(log(gap));
        }
    }
    if xs.len() < 3 {
        return Err(Error::Fit("fewer than three points in the fit window"));
    }
    let (slope, _) = linear_fit(&xs, &ys)?;
    if !(slope < 0.0) {
        return Err(Error::Fit("non-decreasing tail"));
    }
    Ok(-slope)
}
