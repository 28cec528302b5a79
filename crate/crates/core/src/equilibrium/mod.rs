//! Best responses, Nash equilibria, social optima and AP mechanism designs.
//!
//! With bidirectional traffic (`k < ∞`) a station's utility
//! `min(S_u, k·S_d)` is maximised where the increasing uplink curve meets the
//! decreasing scaled downlink curve, which gives the implicit best response
//!
//! ```text
//! τ = k·τ_AP / (n − (n − k)·τ_AP),   τ_AP = f(1 − (1 − p_i)(1 − τ))
//! ```
//!
//! Every station sees the same right-hand side at a homogeneous outcome, so
//! the homogeneous fixed point `τ*` is the unique non-trivial equilibrium.

mod design;
mod oracle;
mod solve;

pub use design::{
    ack_alpha_bound, ack_design, ack_utility, design_ap_tau, ne_utility_fixed_ap, uplink_ne_utility,
    AckSuppressionDesign, ApDesign, ALPHA_SAFETY_FACTOR,
};
pub use oracle::{verify_ne, verify_pareto, GameModel, MAX_PARETO_GRID, MAX_PARETO_STATIONS, TIE_MARGIN};
pub use solve::RESIDUAL_TOLERANCE;

use crate::analytic::{homogeneous_curves, homogeneous_frame_rates, ApModel, TrafficRatio};
use crate::error::{Error, Result};
use crate::phy::PhyProfile;

/// Outcome of a best-response computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BestResponse {
    Tau(f64),
    /// The utility does not depend on the station's own strategy (it is
    /// identically zero), so every `τ` is a best response.
    Indifferent,
}

impl BestResponse {
    pub fn tau(&self) -> Option<f64> {
        match self {
            Self::Tau(t) => Some(*t),
            Self::Indifferent => None,
        }
    }
}

/// `k·τ_AP / (n − (n − k)·τ_AP)` for finite `k`.
pub(crate) fn crossing(k: f64, n: f64, tau_ap: f64) -> f64 {
    k * tau_ap / (n - (n - k) * tau_ap)
}

/// Best response of a station facing interference `p_i`.
pub fn best_response(p_i: f64, n: usize, k: TrafficRatio, ap: &ApModel) -> Result<BestResponse> {
    if !(0.0..=1.0).contains(&p_i) {
        return Err(Error::InvalidParameter(format!("interference {p_i} outside [0, 1]")));
    }
    k.require_positive()?;
    if p_i >= 1.0 {
        return Ok(BestResponse::Indifferent);
    }
    let k = match k {
        TrafficRatio::Infinite => return Ok(BestResponse::Tau(1.0)),
        TrafficRatio::Finite(k) => k,
    };
    let nf = n as f64;
    match *ap {
        ApModel::Absent | ApModel::Fixed(0.0) => Ok(BestResponse::Indifferent),
        ApModel::Fixed(v) => Ok(BestResponse::Tau(crossing(k, nf, v))),
        ApModel::Legacy(cfg) => {
            let rhs = |t: f64| {
                let tau_ap = crate::analytic::legacy_response(1.0 - (1.0 - p_i) * (1.0 - t), &cfg);
                crossing(k, nf, tau_ap)
            };
            solve::fixed_point(rhs).map(BestResponse::Tau)
        }
    }
}

/// Right-hand side of the homogeneous fixed-point equation.
fn homogeneous_rhs(tau: f64, n: usize, k: f64, ap: &ApModel) -> f64 {
    let tau_ap = ap.access_probability(1.0 - (1.0 - tau).powi(n as i32));
    crossing(k, n as f64, tau_ap)
}

fn finite_k(k: TrafficRatio) -> Result<f64> {
    k.require_positive()?;
    match k {
        TrafficRatio::Finite(k) => Ok(k),
        TrafficRatio::Infinite => Err(Error::InvalidParameter(
            "k = inf has no homogeneous equilibrium with non-null utility".into(),
        )),
    }
}

/// Homogeneous Nash equilibrium `τ*` for `k ∈ (0, ∞)`.
pub fn homogeneous_ne(n: usize, k: TrafficRatio, ap: &ApModel) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one station".into()));
    }
    let k = finite_k(k)?;
    match *ap {
        ApModel::Absent => Err(Error::InvalidParameter(
            "without downlink traffic every outcome gives zero utility for finite k".into(),
        )),
        ApModel::Fixed(v) if v <= 0.0 => Err(Error::InvalidParameter("fixed tau_ap must be positive".into())),
        ApModel::Fixed(v) => Ok(crossing(k, n as f64, v)),
        ApModel::Legacy(_) => solve::fixed_point(|t| homogeneous_rhs(t, n, k, ap)),
    }
}

/// `|τ − rhs(τ)|` of the homogeneous equilibrium equation.
pub fn ne_residual(tau: f64, n: usize, k: TrafficRatio, ap: &ApModel) -> Result<f64> {
    let k = finite_k(k)?;
    Ok((tau - homogeneous_rhs(tau, n, k, ap)).abs())
}

/// Number of sign changes of `τ − rhs(τ)` on a uniform interior grid.
pub fn count_fixed_point_crossings(n: usize, k: TrafficRatio, ap: &ApModel, grid: usize) -> Result<usize> {
    let k = finite_k(k)?;
    let g = |t: f64| t - homogeneous_rhs(t, n, k, ap);
    let values: Vec<f64> = (1..=grid).map(|i| g(i as f64 / (grid + 1) as f64)).collect();
    Ok(values.windows(2).filter(|w| w[0].signum() != w[1].signum()).count())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumReport {
    pub tau_star: f64,
    /// Maximiser of the homogeneous uplink throughput.
    pub tau_x: f64,
    /// Maximiser of the homogeneous social utility.
    pub tau_prime: f64,
    /// `k` at which `τ* = τ_x`; `None` if no such `k` exists below `1e9`.
    pub k_x: Option<f64>,
    /// Utility of every station at the homogeneous equilibrium (bits/s).
    pub ne_utility: f64,
    /// Utility at `τ′` (bits/s).
    pub social_utility: f64,
    pub is_pareto: bool,
}

pub(crate) const TAU_X_TOLERANCE: f64 = 1e-9;
pub(crate) const K_X_TOLERANCE: f64 = 1e-3;

/// `τ_x = argmax S_u^hom(τ)`.
pub fn uplink_optimum(n: usize, phy: &PhyProfile, ap: &ApModel) -> f64 {
    let (lo, hi) = solve::BRACKET;
    solve::golden_section_max(|t| homogeneous_frame_rates(t, n, phy, ap).uplink, lo, hi, TAU_X_TOLERANCE)
}

/// Critical `k` where the equilibrium reaches `τ_x`.
pub fn critical_k(n: usize, tau_x: f64, ap: &ApModel) -> Result<Option<f64>> {
    let h = |k: f64| homogeneous_ne(n, TrafficRatio::Finite(k), ap).map(|t| t - tau_x);
    let lo = 1e-3;
    if h(lo)? >= 0.0 {
        return Ok(None);
    }
    let mut hi = 1.0;
    while h(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e9 {
            return Ok(None);
        }
    }
    solve::bisect_increasing(h, lo, hi, K_X_TOLERANCE).map(Some)
}

/// Equilibrium, uplink optimum and social optimum for `n ≥ 2` stations.
pub fn social_optimum(n: usize, k: TrafficRatio, phy: &PhyProfile, ap: &ApModel) -> Result<EquilibriumReport> {
    if n < 2 {
        return Err(Error::InvalidParameter("social optimum needs at least two stations".into()));
    }
    let tau_star = homogeneous_ne(n, k, ap)?;
    let tau_x = uplink_optimum(n, phy, ap);
    let is_pareto = tau_star <= tau_x;
    let tau_prime = if is_pareto { tau_star } else { tau_x };
    Ok(EquilibriumReport {
        tau_star,
        tau_x,
        tau_prime,
        k_x: critical_k(n, tau_x, ap)?,
        ne_utility: homogeneous_curves(tau_star, n, k, phy, ap).utility,
        social_utility: homogeneous_curves(tau_prime, n, k, phy, ap).utility,
        is_pareto,
    })
}
