//! Closed-loop controllers driven by [`EstimatorState`].
//!
//! Stations re-evaluate the fixed-AP best response
//! `k·τ̂_AP / (n̂ − (n̂ − k)·τ̂_AP)` (or the ACK-suppression threshold) at the
//! end of every observation window; the AP re-evaluates its mechanism
//! design the same way.

use crate::analytic::TrafficRatio;
use crate::equilibrium::{ack_design, crossing, design_ap_tau, AckSuppressionDesign};
use crate::error::{Error, Result};
use crate::estimators::EstimatorState;
use crate::phy::PhyProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub k: TrafficRatio,
    /// Windows between strategy changes.
    pub update_every: u32,
    pub tau_floor: f64,
    pub tau_ceiling: f64,
}

impl ControllerConfig {
    pub fn new(k: TrafficRatio) -> Self {
        Self { k, update_every: 1, tau_floor: 1e-4, tau_ceiling: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        self.k.require_positive()?;
        if !(self.tau_floor > 0.0 && self.tau_floor < self.tau_ceiling && self.tau_ceiling <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "clamps must satisfy 0 < floor < ceiling <= 1, got {} and {}",
                self.tau_floor, self.tau_ceiling
            )));
        }
        if self.update_every == 0 {
            return Err(Error::InvalidParameter("update_every must be at least 1".into()));
        }
        Ok(())
    }

    fn clamp(&self, tau: f64) -> f64 {
        tau.clamp(self.tau_floor, self.tau_ceiling)
    }
}

/// Strategy chosen for the next window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub tau: f64,
    /// The raw value was unusable and had to be replaced by a clamp.
    pub flagged: bool,
}

impl Step {
    fn ok(tau: f64) -> Self {
        Self { tau, flagged: false }
    }

    fn flagged(tau: f64) -> Self {
        Self { tau, flagged: true }
    }
}

fn require_window(est: &EstimatorState) -> Result<()> {
    if est.windows == 0 {
        return Err(Error::InvalidParameter("controller stepped before the first observation window".into()));
    }
    Ok(())
}

/// Contender count fed to the controllers; a station always counts itself.
fn contenders(est: &EstimatorState) -> usize {
    est.rounded_n().max(1)
}

/// Station best response to the estimated (or announced) `τ_AP`.
pub fn station_best_response_step(
    est: &EstimatorState,
    cfg: &ControllerConfig,
    ap_known_fixed: Option<f64>,
) -> Result<Step> {
    require_window(est)?;
    let tau_ap = ap_known_fixed.unwrap_or(est.tau_ap_hat);
    let k = match cfg.k {
        TrafficRatio::Infinite => return Ok(Step::ok(cfg.tau_ceiling)),
        TrafficRatio::Finite(k) => k,
    };
    if tau_ap <= 0.0 {
        return Ok(Step::ok(cfg.tau_floor));
    }
    let n = contenders(est) as f64;
    if n - (n - k) * tau_ap <= 0.0 {
        return Ok(Step::flagged(cfg.tau_ceiling));
    }
    Ok(Step::ok(cfg.clamp(crossing(k, n, tau_ap))))
}

/// Uplink-only station facing ACK suppression: play the threshold
/// `1/(n̂·√(T/2σ))` the AP is expected to enforce.
pub fn station_ack_response_step(est: &EstimatorState, cfg: &ControllerConfig, phy: &PhyProfile) -> Result<Step> {
    require_window(est)?;
    Ok(Step::ok(cfg.clamp(ack_design(contenders(est), phy).gamma)))
}

/// AP access probability realising the designed equilibrium for `round(n̂)`
/// stations. Holds `previous` until at least one station has been heard.
pub fn ap_design_step(est: &EstimatorState, k: TrafficRatio, phy: &PhyProfile, previous: f64, floor: f64) -> Result<Step> {
    require_window(est)?;
    if est.n_hat < 1.0 {
        return Ok(Step::ok(previous));
    }
    if k.is_infinite() {
        return Ok(Step::flagged(floor));
    }
    match design_ap_tau(est.rounded_n(), k, phy) {
        Ok(d) => Ok(Step::ok(d.tau_ap.max(floor))),
        Err(Error::InfeasibleDesign(_)) => {
            let raw = 1.0 / ((1.0 + k.value()) * phy.contention_scale());
            Ok(Step::flagged(raw.clamp(floor, 1.0)))
        }
        Err(e) => Err(e),
    }
}

/// ACK drop probability for a frame from `transmitter`.
pub fn ack_suppressor_step(est: &EstimatorState, design: &AckSuppressionDesign, transmitter: crate::NodeId) -> f64 {
    design.drop_probability(est.tau_hat(transmitter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorSettings;
    use crate::NodeId;

    fn est(n_hat: f64, tau_ap_hat: f64) -> EstimatorState {
        let mut s = EstimatorState::new(&EstimatorSettings::default());
        s.n_hat = n_hat;
        s.tau_ap_hat = tau_ap_hat;
        s.windows = 1;
        s
    }

    fn b11() -> PhyProfile {
        PhyProfile::preset("b11").unwrap()
    }

    #[test]
    fn best_response_example() {
        let cfg = ControllerConfig::new(TrafficRatio::Finite(1.0));
        let s = station_best_response_step(&est(10.2, 0.064), &cfg, None).unwrap();
        assert!((s.tau - 0.064 / (10.0 - 9.0 * 0.064)).abs() < 1e-15);
        assert!((s.tau - 0.00679).abs() < 1e-5);
        assert!(!s.flagged);
    }

    #[test]
    fn best_response_edge_cases() {
        let cfg = ControllerConfig::new(TrafficRatio::Finite(6.0));
        let s = station_best_response_step(&est(6.0, 0.2), &cfg, None).unwrap();
        assert!((s.tau - 0.2).abs() < 1e-15);
        let s = station_best_response_step(&est(6.0, 0.0), &cfg, None).unwrap();
        assert_eq!(s.tau, cfg.tau_floor);
        let s = station_best_response_step(&est(6.0, 0.9), &cfg, Some(0.3)).unwrap();
        assert!((s.tau - 0.3).abs() < 1e-15);
        let inf = ControllerConfig::new(TrafficRatio::Infinite);
        assert_eq!(station_best_response_step(&est(6.0, 0.2), &inf, None).unwrap().tau, 1.0);
        let fresh = EstimatorState::new(&EstimatorSettings::default());
        assert!(station_best_response_step(&fresh, &cfg, None).is_err());
    }

    #[test]
    fn ap_design_matches_closed_form_and_ignores_n() {
        let phy = b11();
        let k1 = TrafficRatio::Finite(1.0);
        let a = ap_design_step(&est(10.0, 0.0), k1, &phy, 0.5, 1e-4).unwrap();
        assert!((a.tau - 0.07746).abs() < 1e-4);
        let b = ap_design_step(&est(20.0, 0.0), k1, &phy, 0.5, 1e-4).unwrap();
        assert!((a.tau - b.tau).abs() < 1e-15);
        let held = ap_design_step(&est(0.4, 0.0), k1, &phy, 0.123, 1e-4).unwrap();
        assert_eq!(held.tau, 0.123);
        let inf = ap_design_step(&est(10.0, 0.0), TrafficRatio::Infinite, &phy, 0.5, 1e-3).unwrap();
        assert_eq!((inf.tau, inf.flagged), (1e-3, true));
    }

    #[test]
    fn ack_steps() {
        let phy = b11();
        let d = ack_design(2, &phy);
        let mut s = est(2.0, 0.0);
        s.tau_i_hat.insert(NodeId(1), d.gamma);
        s.tau_i_hat.insert(NodeId(2), d.gamma + 1.0 / d.alpha);
        assert_eq!(ack_suppressor_step(&s, &d, NodeId(1)), 0.0);
        assert!((ack_suppressor_step(&s, &d, NodeId(2)) - 1.0).abs() < 1e-12);
        assert_eq!(ack_suppressor_step(&s, &d, NodeId(3)), 0.0);
        let cfg = ControllerConfig::new(TrafficRatio::Infinite);
        let g = station_ack_response_step(&s, &cfg, &phy).unwrap();
        assert_eq!(g.tau, d.gamma);
    }

    #[test]
    fn config_validation() {
        let mut c = ControllerConfig::new(TrafficRatio::Finite(1.0));
        assert!(c.validate().is_ok());
        c.tau_floor = 0.0;
        assert!(c.validate().is_err());
        assert!(ControllerConfig::new(TrafficRatio::Finite(0.0)).validate().is_err());
    }
}
