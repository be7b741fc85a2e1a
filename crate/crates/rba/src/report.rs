//! Data behind the `thresholds`, `branches`, `classify` and `bgk` commands.

use rand::Rng;
use rba_core::bgk::{classify_limit_with, decay_rate_fit, BgkTrajectory, LimitClassification};
use rba_core::equilibrium::{
    classify_all_with, find_thresholds, hessian_eigenvalues, Branch, BranchTables, Frame, ALPHA_MAX, ARGMIN_TOL,
    INTEGRAL_TOL, RHO_C, ROOT_TOL,
};
use rba_core::rng::init_rng;
use rba_core::so3::haar_sample;
use rba_core::von_mises::MomentQuadrature;
use rba_core::Mat3;
use serde::Serialize;

use crate::table::{num, opt, Table};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub alpha_star: f64,
    pub rho_star: f64,
    pub c_star: f64,
    pub rho_c: f64,
    pub integral_tol: f64,
    pub root_tol: f64,
    pub argmin_tol: f64,
    pub alpha_max: f64,
}

pub fn thresholds() -> anyhow::Result<ThresholdReport> {
    let t = find_thresholds()?;
    Ok(ThresholdReport {
        alpha_star: t.alpha_star,
        rho_star: t.rho_star,
        c_star: t.c_star,
        rho_c: t.rho_c,
        integral_tol: INTEGRAL_TOL,
        root_tol: ROOT_TOL,
        argmin_tol: ARGMIN_TOL,
        alpha_max: ALPHA_MAX,
    })
}

/// `n` log-spaced densities on `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect(),
    }
}

/// Order parameters of the three branches at one density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRow {
    pub rho: f64,
    pub c1_up: Option<f64>,
    pub c1_down: Option<f64>,
    pub c2: Option<f64>,
    pub uniform_stable: bool,
}

pub fn branch_rows(t: &BranchTables, rhos: &[f64]) -> Vec<BranchRow> {
    rhos.iter()
        .map(|&rho| BranchRow {
            rho,
            c1_up: t.branch_c(Branch::AxialUp, rho).ok(),
            c1_down: t.branch_c(Branch::AxialDown, rho).ok(),
            c2: t.branch_c(Branch::Rank1, rho).ok(),
            uniform_stable: rho < RHO_C,
        })
        .collect()
}

pub fn branch_table(rows: &[BranchRow]) -> Table {
    let mut t = Table::new(&["rho", "c1_up", "c1_down", "c2", "uniform_stable_flag"]);
    for r in rows {
        t.push(vec![num(r.rho), opt(r.c1_up), opt(r.c1_down), opt(r.c2), u8::from(r.uniform_stable).to_string()]);
    }
    t
}

/// One steady state with its stability data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRow {
    pub class: &'static str,
    pub alpha: f64,
    pub order_parameter: f64,
    pub signature: String,
    pub eigenvalues: [f64; 3],
    pub stable: bool,
    pub critical: bool,
}

pub fn classify(t: &BranchTables, rho: f64) -> anyhow::Result<Vec<ClassRow>> {
    Ok(classify_all_with(t, rho)?
        .into_iter()
        .map(|c| ClassRow {
            class: c.class.tag.name(),
            alpha: c.class.alpha,
            order_parameter: c.order_parameter,
            signature: c.report.signature,
            eigenvalues: c.report.eigenvalues,
            stable: c.stable,
            critical: c.critical,
        })
        .collect())
}

pub fn class_table(rows: &[ClassRow]) -> Table {
    let mut t = Table::new(&["class", "alpha", "order_parameter", "signature", "lambda1", "lambda2", "lambda3", "stable", "critical"]);
    for r in rows {
        t.push(vec![
            r.class.to_string(),
            num(r.alpha),
            num(r.order_parameter),
            r.signature.clone(),
            num(r.eigenvalues[0]),
            num(r.eigenvalues[1]),
            num(r.eigenvalues[2]),
            u8::from(r.stable).to_string(),
            u8::from(r.critical).to_string(),
        ]);
    }
    t
}

/// Named initial flux matrices for the BGK flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgkPreset {
    /// Entries uniform on `[-1, 1]`.
    Random,
    /// A Haar-random rotation `A₀`.
    Rotation,
    /// `√3 a⊗b` for random unit vectors.
    Rank1,
    /// A random rotation scaled by `0.1`.
    Small,
}

impl BgkPreset {
    pub fn matrix(self, seed: u64) -> Mat3 {
        let mut rng = init_rng(seed);
        match self {
            BgkPreset::Random => Mat3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
            BgkPreset::Rotation => haar_sample(&mut rng).into_matrix(),
            BgkPreset::Rank1 => {
                let a = haar_sample(&mut rng).matrix().col(0);
                let b = haar_sample(&mut rng).matrix().col(0);
                a.outer(b).scale(3f64.sqrt())
            }
            BgkPreset::Small => haar_sample(&mut rng).matrix().scale(0.1),
        }
    }
}

impl std::str::FromStr for BgkPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(BgkPreset::Random),
            "rotation" => Ok(BgkPreset::Rotation),
            "rank1" => Ok(BgkPreset::Rank1),
            "small" => Ok(BgkPreset::Small),
            _ => Err(format!("unknown preset {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FrameJson {
    None,
    /// Row-major `A₀`.
    Rotation { a0: [f64; 9] },
    Pair { a0: [f64; 3], b0: [f64; 3] },
}

impl From<&Frame> for FrameJson {
    fn from(f: &Frame) -> Self {
        match f {
            Frame::None => FrameJson::None,
            Frame::Rotation(r) => FrameJson::Rotation { a0: r.matrix().to_row_major() },
            Frame::Pair(a, b) => FrameJson::Pair { a0: a.to_array(), b0: b.to_array() },
        }
    }
}

/// Outcome of one BGK flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BgkReport {
    /// `converged`, `unclassified` (converged to no known state) or
    /// `not_converged`.
    pub status: &'static str,
    pub rho: f64,
    pub j0: [f64; 9],
    pub class: Option<&'static str>,
    pub alpha: Option<f64>,
    pub frame: FrameJson,
    pub critical: bool,
    /// Fitted rate of `V − V∞`, on converged flows into a strict minimum.
    pub decay_rate: Option<f64>,
    pub d_inf: [f64; 3],
    pub j_inf: [f64; 9],
    pub t_final: f64,
    pub steps: usize,
}

impl BgkReport {
    pub fn converged(&self) -> bool {
        self.status != "not_converged"
    }
}

pub fn bgk(
    t: &BranchTables,
    quad: &MomentQuadrature,
    rho: f64,
    j0: &Mat3,
    t_max: f64,
) -> anyhow::Result<(BgkReport, BgkTrajectory)> {
    let LimitClassification { class, j_inf, d_inf, critical, trajectory } = classify_limit_with(t, quad, rho, j0, t_max)?;
    let status = match (trajectory.converged, class.is_some()) {
        (false, _) => "not_converged",
        (true, true) => "converged",
        (true, false) => "unclassified",
    };
    let stable_limit = trajectory.converged && hessian_eigenvalues(rho, d_inf)?.iter().all(|&l| l > 0.0);
    let decay_rate = if stable_limit && !critical { decay_rate_fit(&trajectory).ok() } else { None };
    let report = BgkReport {
        status,
        rho,
        j0: j0.to_row_major(),
        class: class.map(|c| c.tag.name()),
        alpha: class.map(|c| c.alpha),
        frame: class.map(|c| FrameJson::from(&c.frame)).unwrap_or(FrameJson::None),
        critical,
        decay_rate,
        d_inf: d_inf.to_array(),
        j_inf: j_inf.to_row_major(),
        t_final: trajectory.times.last().copied().unwrap_or(0.0),
        steps: trajectory.times.len().saturating_sub(1),
    };
    Ok((report, trajectory))
}

/// Columns `t,d1,d2,d3,V`.
pub fn trajectory_table(tr: &BgkTrajectory) -> Table {
    let mut t = Table::new(&["t", "d1", "d2", "d3", "V"]);
    for ((time, d), v) in tr.times.iter().zip(&tr.d_values).zip(&tr.v_values) {
        t.push(vec![num(*time), num(d.x), num(d.y), num(d.z), num(*v)]);
    }
    t
}
