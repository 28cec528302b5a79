//! Closed-form slotted contention model.
//!
//! A station is summarised by its access probability `τ_i` and the
//! probability `p_i` that at least one other station transmits in the same
//! slot. The access point contends for the downlink either as a legacy
//! backoff station (`τ_AP = f(p_AP)`), with a fixed access probability, or
//! not at all.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::phy::PhyProfile;

/// Legacy binary exponential backoff parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackoffConfig {
    cw_min: u32,
    cw_max: u32,
    retry_limit: u32,
}

impl Default for BackoffConfig {
    /// `CW_min = 16`, `CW_max = 1024`, six doubling stages.
    fn default() -> Self {
        Self { cw_min: 16, cw_max: 1024, retry_limit: 6 }
    }
}

impl BackoffConfig {
    /// `cw_max` must equal `cw_min · 2^m` for some `m ≥ 0`.
    pub fn new(cw_min: u32, cw_max: u32, retry_limit: u32) -> Result<Self> {
        if cw_min == 0 {
            return Err(Error::InvalidParameter("cw_min must be positive".into()));
        }
        if cw_max < cw_min || cw_max % cw_min != 0 || !(cw_max / cw_min).is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "cw_max ({cw_max}) must be cw_min ({cw_min}) times a power of two"
            )));
        }
        if retry_limit > 62 {
            return Err(Error::InvalidParameter(format!("retry limit {retry_limit} is too large")));
        }
        Ok(Self { cw_min, cw_max, retry_limit })
    }

    /// A constant window (`CW_min = CW_max = cw`), as used by cheating cards.
    pub fn constant(cw: u32, retry_limit: u32) -> Result<Self> {
        Self::new(cw, cw, retry_limit)
    }

    pub fn cw_min(&self) -> u32 {
        self.cw_min
    }

    pub fn cw_max(&self) -> u32 {
        self.cw_max
    }

    pub fn retry_limit(&self) -> u32 {
        self.retry_limit
    }

    /// `W(i) = min(2^i · CW_min, CW_max)`.
    pub fn window(&self, stage: u32) -> u32 {
        let w = u64::from(self.cw_min) << stage.min(40);
        w.min(u64::from(self.cw_max)) as u32
    }

    pub fn windows(&self) -> impl Iterator<Item = u32> + '_ {
        (0..=self.retry_limit).map(|i| self.window(i))
    }
}

/// Legacy station access probability as a function of its collision
/// probability.
///
/// Evaluated after dividing numerator and denominator by `1 − p`, i.e. as
///
/// ```text
/// f(p) = 2·Σ p^i / (Σ p^i + Σ p^i·W(i)),   i = 0..=R
/// ```
///
/// which avoids the cancellation in `1 − p^(R+1)` near `p = 1`. At `p = 1`
/// this is the limit `2(R+1) / (R + 1 + Σ W(i))`, which is also what a
/// backoff chain with forced collisions produces.
pub fn legacy_response(p: f64, cfg: &BackoffConfig) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "collision probability {p}");
    let mut geometric = 0.0;
    let mut weighted = 0.0;
    let mut pi = 1.0;
    for w in cfg.windows() {
        geometric += pi;
        weighted += pi * f64::from(w);
        pi *= p;
    }
    2.0 * geometric / (geometric + weighted)
}

/// Desired ratio `k` between a station's uplink and its downlink share.
///
/// `k = ∞` is kept as a separate variant: the utility then reduces to the
/// uplink throughput and the `n − (n − k)·τ_AP` terms are never evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrafficRatio {
    Finite(f64),
    Infinite,
}

impl TrafficRatio {
    pub fn finite(k: f64) -> Result<Self> {
        if k.is_finite() && k >= 0.0 {
            Ok(Self::Finite(k))
        } else {
            Err(Error::InvalidParameter(format!("k must be a non-negative number or \"inf\", got {k}")))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite)
    }

    /// Numeric value, `f64::INFINITY` for the unidirectional case.
    pub fn value(&self) -> f64 {
        match *self {
            Self::Finite(k) => k,
            Self::Infinite => f64::INFINITY,
        }
    }

    /// Solvers need `k > 0`; `k = 0` makes the best response undefined.
    pub(crate) fn require_positive(&self) -> Result<()> {
        match *self {
            Self::Finite(k) if k <= 0.0 => {
                Err(Error::InvalidParameter("k must be positive or \"inf\"".into()))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for TrafficRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(k) => write!(f, "{k}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for TrafficRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Self::Infinite),
            other => {
                let k: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("k must be a number or \"inf\", got `{other}`")))?;
                Self::finite(k)
            }
        }
    }
}

/// How the access point contends for the downlink in the analytic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApModel {
    /// Legacy backoff station: `τ_AP = f(p_AP)`.
    Legacy(BackoffConfig),
    /// Access probability fixed by the AP.
    Fixed(f64),
    /// No downlink traffic (`τ_AP = 0`).
    Absent,
}

impl ApModel {
    /// `τ_AP` given the collision probability the AP perceives.
    pub fn access_probability(&self, p_ap: f64) -> f64 {
        match self {
            Self::Legacy(cfg) => legacy_response(p_ap, cfg),
            Self::Fixed(v) => *v,
            Self::Absent => 0.0,
        }
    }
}

/// A strategy vector `(τ_1, …, τ_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    taus: Vec<f64>,
}

impl Outcome {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::InvalidParameter("an outcome needs at least one station".into()));
        }
        if let Some(bad) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::InvalidParameter(format!("access probability {bad} outside [0, 1]")));
        }
        Ok(Self { taus })
    }

    pub fn homogeneous(n: usize, tau: f64) -> Result<Self> {
        Self::new(vec![tau; n])
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn tau(&self, i: usize) -> f64 {
        self.taus[i]
    }

    /// `p_i = 1 − Π_{j≠i} (1 − τ_j)`.
    pub fn interference(&self, i: usize) -> f64 {
        let idle: f64 = self
            .taus
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, t)| 1.0 - t)
            .product();
        1.0 - idle
    }

    /// `p_AP = 1 − Π_j (1 − τ_j)`.
    pub fn ap_collision(&self) -> f64 {
        1.0 - self.taus.iter().map(|t| 1.0 - t).product::<f64>()
    }

    /// Same outcome with station `i` playing `tau` instead.
    pub fn with_strategy(&self, i: usize, tau: f64) -> Self {
        let mut taus = self.taus.clone();
        taus[i] = tau;
        Self { taus }
    }
}

/// Throughputs (bits/s) and utility perceived by one station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationRates {
    pub uplink: f64,
    pub downlink: f64,
    pub utility: f64,
    pub p_idle: f64,
}

/// Per-payload-bit throughputs in frames/μs, plus `P_idle`.
///
/// Everything that searches over `τ` works on these so that results do not
/// depend on the payload size at all.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FrameRates {
    pub uplink: f64,
    pub downlink: f64,
    pub p_idle: f64,
}

impl FrameRates {
    pub fn utility(&self, k: TrafficRatio) -> f64 {
        match k {
            TrafficRatio::Infinite => self.uplink,
            TrafficRatio::Finite(k) => self.uplink.min(k * self.downlink),
        }
    }
}

pub(crate) fn frame_rates(tau_i: f64, p_i: f64, n: usize, phy: &PhyProfile, ap: &ApModel) -> FrameRates {
    debug_assert!((0.0..=1.0).contains(&p_i));
    frame_rates_idle(tau_i, 1.0 - p_i, n, phy, ap)
}

/// [`frame_rates`] parameterised by `1 − p_i`, the probability that no
/// other station transmits. Callers that know this product directly avoid
/// the cancellation in `1 − p_i` when it is tiny.
pub(crate) fn frame_rates_idle(tau_i: f64, others_idle: f64, n: usize, phy: &PhyProfile, ap: &ApModel) -> FrameRates {
    debug_assert!((0.0..=1.0).contains(&tau_i) && (0.0..=1.0).contains(&others_idle));
    debug_assert!(n >= 1);
    let stations_idle = others_idle * (1.0 - tau_i);
    let tau_ap = ap.access_probability(1.0 - stations_idle);
    let p_idle = stations_idle * (1.0 - tau_ap);
    let mean_slot = p_idle * phy.sigma_us() + (1.0 - p_idle) * phy.busy_us();
    FrameRates {
        uplink: tau_i * others_idle * (1.0 - tau_ap) / mean_slot,
        downlink: tau_ap * stations_idle / mean_slot / n as f64,
        p_idle,
    }
}

impl FrameRates {
    fn to_bits(self, k: TrafficRatio, phy: &PhyProfile) -> StationRates {
        StationRates {
            uplink: phy.bits_per_second(self.uplink),
            downlink: phy.bits_per_second(self.downlink),
            utility: phy.bits_per_second(self.utility(k)),
            p_idle: self.p_idle,
        }
    }
}

/// Uplink, per-station downlink and utility `min(S_u, k·S_d)` of a station.
pub fn station_rates(
    tau_i: f64,
    p_i: f64,
    n: usize,
    k: TrafficRatio,
    phy: &PhyProfile,
    ap: &ApModel,
) -> StationRates {
    frame_rates(tau_i, p_i, n, phy, ap).to_bits(k, phy)
}

/// `1 − (1 − τ)^(n−1)`: interference seen when every station plays `τ`.
pub fn homogeneous_interference(tau: f64, n: usize) -> f64 {
    1.0 - (1.0 - tau).powi(n as i32 - 1)
}

/// [`station_rates`] on the homogeneous outcome `(τ, …, τ)`.
pub fn homogeneous_curves(tau: f64, n: usize, k: TrafficRatio, phy: &PhyProfile, ap: &ApModel) -> StationRates {
    homogeneous_frame_rates(tau, n, phy, ap).to_bits(k, phy)
}

pub(crate) fn homogeneous_frame_rates(tau: f64, n: usize, phy: &PhyProfile, ap: &ApModel) -> FrameRates {
    frame_rates_idle(tau, (1.0 - tau).powi(n as i32 - 1), n, phy, ap)
}

/// Constant contention window realising access probability `tau`:
/// `round(2/τ − 2)`.
pub fn cw_for_tau(tau: f64) -> Result<u32> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "no finite contention window realises access probability {tau}"
        )));
    }
    Ok((2.0 / tau - 2.0).round().max(0.0) as u32)
}

/// Inverse of [`cw_for_tau`]: `2 / (CW + 2)`.
pub fn tau_for_cw(cw: u32) -> f64 {
    2.0 / (f64::from(cw) + 2.0)
}
