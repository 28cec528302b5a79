//! Access-point mechanism designs: fixed `τ_AP` tuning and ACK suppression.

use crate::analytic::{frame_rates, ApModel, TrafficRatio};
use crate::error::{Error, Result};
use crate::phy::PhyProfile;

/// Margin applied on top of the minimum ACK-suppression slope.
pub const ALPHA_SAFETY_FACTOR: f64 = 1.25;

/// Utility perceived at the homogeneous equilibrium `(τ, …, τ)` that a fixed
/// `τ_AP` induces, as a function of that equilibrium.
pub fn ne_utility_fixed_ap(tau: f64, n: usize, k: TrafficRatio, phy: &PhyProfile) -> f64 {
    let (sigma, busy) = (phy.sigma_us(), phy.busy_us());
    let idle = (1.0 - tau).powi(n as i32);
    let load = match k {
        TrafficRatio::Infinite => -1.0,
        TrafficRatio::Finite(k) if k == 0.0 => return 0.0,
        TrafficRatio::Finite(k) => (n as f64 - k) / k,
    };
    let denom = busy - idle * (1.0 - tau) * (busy - sigma) + load * busy * tau;
    phy.bits_per_second(tau * idle / denom)
}

/// Homogeneous uplink throughput with no downlink contention; the `k → ∞`
/// limit of [`ne_utility_fixed_ap`].
pub fn uplink_ne_utility(tau: f64, n: usize, phy: &PhyProfile) -> f64 {
    let idle = (1.0 - tau).powi(n as i32);
    let others_idle = (1.0 - tau).powi(n as i32 - 1);
    phy.bits_per_second(tau * others_idle / (idle * phy.sigma_us() + (1.0 - idle) * phy.busy_us()))
}

/// Approximate optimal fixed `τ_AP` and the equilibrium it induces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApDesign {
    pub tau_ap: f64,
    pub tau_o: f64,
}

/// Treats the downlink as `n/k` aggregated flows among `n + n/k` contenders
/// and applies the `1/(N√(T/2σ))` optimum.
pub fn design_ap_tau(n: usize, k: TrafficRatio, phy: &PhyProfile) -> Result<ApDesign> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one station".into()));
    }
    k.require_positive()?;
    let TrafficRatio::Finite(k) = k else {
        return Err(Error::InfeasibleDesign("tau_ap vanishes for k = inf; use ACK suppression".into()));
    };
    let nf = n as f64;
    let s = phy.contention_scale();
    let tau_ap = nf / ((nf + k * nf) * s);
    let tau_o = k / ((k * nf + nf) * s - (nf - k));
    let inside = |v: f64| v > 0.0 && v < 1.0;
    if !inside(tau_ap) || !inside(tau_o) {
        return Err(Error::InfeasibleDesign(format!(
            "n={n}, k={k}: design gives tau_ap={tau_ap}, tau_o={tau_o}, outside (0, 1)"
        )));
    }
    Ok(ApDesign { tau_ap, tau_o })
}

/// Threshold `γ` and slope `α` of the ACK-dropping punishment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AckSuppressionDesign {
    pub gamma: f64,
    pub alpha: f64,
    /// Target equilibrium; equal to `gamma` for designs from [`ack_design`].
    pub tau_o: f64,
}

impl AckSuppressionDesign {
    pub fn new(gamma: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!("gamma {gamma} outside [0, 1]")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be non-negative, got {alpha}")));
        }
        Ok(Self { gamma, alpha, tau_o: gamma })
    }

    /// `min(α(τ − γ), 1)` above the threshold, zero below.
    pub fn drop_probability(&self, tau: f64) -> f64 {
        if tau <= self.gamma {
            0.0
        } else if tau >= self.gamma + 1.0 / self.alpha {
            1.0
        } else {
            self.alpha * (tau - self.gamma)
        }
    }
}

/// Smallest slope that makes the punished utility decrease right above
/// `τ′` when every other station plays `τ′`.
pub fn ack_alpha_bound(tau_prime: f64, n: usize, phy: &PhyProfile) -> f64 {
    let (sigma, busy) = (phy.sigma_us(), phy.busy_us());
    let others_idle = (1.0 - tau_prime).powi(n as i32 - 1);
    let inner = -1.0 + busy / (busy - (busy - sigma) * others_idle);
    1.0 / (tau_prime * (1.0 + tau_prime * inner))
}

/// Design steering `n` stations to the throughput-optimal `1/(n√(T/2σ))`.
pub fn ack_design(n: usize, phy: &PhyProfile) -> AckSuppressionDesign {
    assert!(n >= 1, "ack_design needs at least one station");
    let tau_o = 1.0 / (n as f64 * phy.contention_scale());
    AckSuppressionDesign {
        gamma: tau_o,
        alpha: ALPHA_SAFETY_FACTOR * ack_alpha_bound(tau_o, n, phy),
        tau_o,
    }
}

/// Delivered uplink throughput (bits/s) of a station under ACK suppression,
/// with no downlink contention.
pub fn ack_utility(tau_i: f64, p_i: f64, design: &AckSuppressionDesign, phy: &PhyProfile) -> f64 {
    let uplink = frame_rates(tau_i, p_i, 1, phy, &ApModel::Absent).uplink;
    phy.bits_per_second(uplink * (1.0 - design.drop_probability(tau_i)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::homogeneous_interference;
    use crate::equilibrium::crossing;

    fn b11() -> PhyProfile {
        PhyProfile::preset("b11").unwrap()
    }

    fn argmax_on_grid<F: Fn(f64) -> f64>(f: F, grid: usize) -> f64 {
        (1..grid)
            .map(|i| i as f64 / grid as f64)
            .max_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap()
    }

    #[test]
    fn ne_utility_vanishes_at_zero() {
        let phy = b11();
        assert_eq!(ne_utility_fixed_ap(0.0, 10, TrafficRatio::Finite(1.0), &phy), 0.0);
        assert!(ne_utility_fixed_ap(1e-9, 10, TrafficRatio::Finite(1.0), &phy) < 1.0);
    }

    #[test]
    fn ne_utility_matches_homogeneous_uplink_at_induced_equilibrium() {
        // Invert the fixed-AP best response and evaluate the uplink directly.
        let phy = b11();
        let (n, k) = (10usize, 2.0);
        for tau in [0.005, 0.02, 0.08] {
            let tau_ap = n as f64 * tau / (k + (n as f64 - k) * tau);
            assert!((crossing(k, n as f64, tau_ap) - tau).abs() < 1e-15);
            let direct = crate::analytic::homogeneous_curves(
                tau,
                n,
                TrafficRatio::Finite(k),
                &phy,
                &ApModel::Fixed(tau_ap),
            );
            let j = ne_utility_fixed_ap(tau, n, TrafficRatio::Finite(k), &phy);
            assert!((direct.uplink - j).abs() / j < 1e-12);
            assert!((direct.utility - j).abs() / j < 1e-9);
        }
    }

    #[test]
    fn large_k_limit_is_uplink_curve() {
        // The gap to the limit grows like (n/k)·τ/(1 − τ), so stay below τ = 0.9.
        let phy = b11();
        for i in 1..=90 {
            let tau = i as f64 / 100.0;
            let a = ne_utility_fixed_ap(tau, 10, TrafficRatio::Finite(1e6), &phy);
            let b = uplink_ne_utility(tau, 10, &phy);
            assert!((a - b).abs() / b < 1e-4, "tau={tau}");
            let c = ne_utility_fixed_ap(tau, 10, TrafficRatio::Infinite, &phy);
            assert!((c - b).abs() / b < 1e-12);
        }
    }

    #[test]
    fn design_point_for_b11() {
        let phy = b11();
        let d = design_ap_tau(10, TrafficRatio::Finite(1.0), &phy).unwrap();
        assert!((d.tau_ap - 10.0 / (20.0 * 41.675f64.sqrt())).abs() < 1e-15);
        assert!((d.tau_ap - 0.07746).abs() < 1e-4);
        // The best response at the designed tau_ap returns the designed equilibrium.
        assert!((crossing(1.0, 10.0, d.tau_ap) - d.tau_o).abs() < 1e-15);
    }

    #[test]
    fn design_agrees_with_exact_optimum() {
        let phy = b11();
        for &(n, k) in &[(10usize, 1.0), (10, 0.5), (5, 2.0), (20, 1.0)] {
            let d = design_ap_tau(n, TrafficRatio::Finite(k), &phy).unwrap();
            let tau_exact = argmax_on_grid(|t| ne_utility_fixed_ap(t, n, TrafficRatio::Finite(k), &phy), 200_000);
            let nf = n as f64;
            let tau_ap_exact = nf * tau_exact / (k + (nf - k) * tau_exact);
            assert!((d.tau_ap - tau_ap_exact).abs() / tau_ap_exact < 0.15, "n={n} k={k}");
            let best = ne_utility_fixed_ap(tau_exact, n, TrafficRatio::Finite(k), &phy);
            let approx = ne_utility_fixed_ap(d.tau_o, n, TrafficRatio::Finite(k), &phy);
            assert!(approx >= 0.98 * best, "n={n} k={k}");
        }
    }

    #[test]
    fn design_degenerates_as_k_grows() {
        let phy = b11();
        let d = design_ap_tau(10, TrafficRatio::Finite(1e7), &phy).unwrap();
        assert!(d.tau_ap < 1e-6);
        assert!(matches!(
            design_ap_tau(10, TrafficRatio::Infinite, &phy),
            Err(Error::InfeasibleDesign(_))
        ));
        // A tiny busy/idle ratio pushes the design outside (0, 1).
        let fast = PhyProfile::new(20.0, 21.0, 100.0, "tiny").unwrap();
        assert!(design_ap_tau(1, TrafficRatio::Finite(0.1), &fast).is_err());
    }

    #[test]
    fn ack_design_values() {
        let phy = b11();
        let d2 = ack_design(2, &phy);
        assert!((d2.gamma - 1.0 / (2.0 * phy.contention_scale())).abs() < 1e-15);
        assert!((d2.gamma - 0.07746).abs() < 1e-4);
        let d10 = ack_design(10, &phy);
        assert!((d10.gamma - 0.01549).abs() < 1e-5);
        let exact = argmax_on_grid(|t| uplink_ne_utility(t, 10, &phy), 100_000);
        assert!((exact - d10.gamma).abs() / exact < 0.05, "{exact}");
    }

    #[test]
    fn alpha_bound_is_the_slope_condition() {
        // dJ/dτ at γ⁺ vanishes exactly at the bound; derived independently
        // from the quotient rule on τ(1−p)(1−α(τ−γ)) / D(τ).
        let phy = b11();
        let (sigma, busy) = (phy.sigma_us(), phy.busy_us());
        for n in [1usize, 2, 5, 10, 20] {
            let g = 1.0 / (n as f64 * phy.contention_scale());
            let d = busy - (1.0 - g).powi(n as i32) * (busy - sigma);
            let exact = (1.0 - g * (1.0 - g).powi(n as i32 - 1) * (busy - sigma) / d) / g;
            let bound = ack_alpha_bound(g, n, &phy);
            assert!((exact - bound).abs() / bound < 1e-12, "n={n}");
        }
    }

    #[test]
    fn punished_utility_slopes_down_above_threshold() {
        let phy = b11();
        for n in [2usize, 5, 10, 20] {
            let d = ack_design(n, &phy);
            let p = homogeneous_interference(d.gamma, n);
            let end = d.gamma + 1.0 / d.alpha;
            let steps = 2000;
            let values: Vec<f64> = (1..steps)
                .map(|i| ack_utility(d.gamma + (end - d.gamma) * i as f64 / steps as f64, p, &d, &phy))
                .collect();
            assert!(values.windows(2).all(|w| w[1] < w[0]), "n={n}");
        }
    }

    #[test]
    fn ack_utility_branches() {
        let phy = b11();
        let d = ack_design(10, &phy);
        let p = 0.1;
        let plain = |t: f64| phy.bits_per_second(frame_rates(t, p, 1, &phy, &ApModel::Absent).uplink);
        assert_eq!(ack_utility(d.gamma * 0.5, p, &d, &phy), plain(d.gamma * 0.5));
        assert_eq!(ack_utility(d.gamma, p, &d, &phy), plain(d.gamma));
        assert_eq!(ack_utility(d.gamma + 1.0 / d.alpha, p, &d, &phy), 0.0);
        assert_eq!(ack_utility(0.9, p, &d, &phy), 0.0);

        let open = AckSuppressionDesign::new(d.gamma, 0.0).unwrap();
        for t in [0.01, 0.3, 0.9] {
            assert_eq!(ack_utility(t, p, &open, &phy), plain(t));
        }
        assert_eq!(argmax_on_grid(|t| ack_utility(t, p, &open, &phy), 1000), 0.999);
    }

    #[test]
    fn drop_probability_boundaries() {
        let d = AckSuppressionDesign::new(0.05, 20.0).unwrap();
        assert_eq!(d.drop_probability(0.05), 0.0);
        assert_eq!(d.drop_probability(0.01), 0.0);
        assert!((d.drop_probability(0.1) - 1.0).abs() < 1e-12);
        assert_eq!(d.drop_probability(0.5), 1.0);
        assert!(AckSuppressionDesign::new(1.5, 1.0).is_err());
        assert!(AckSuppressionDesign::new(0.1, -1.0).is_err());
    }
}
