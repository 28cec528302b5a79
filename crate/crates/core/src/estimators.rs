//! Online channel estimators.
//!
//! Every `B` slots a node turns what it heard on the channel into a
//! [`WindowObservation`] and folds it into an [`EstimatorState`] with
//! first-order autoregressive filters:
//!
//! ```text
//! n̂    ← δ·n̂    + (1 − δ)·n^m
//! τ̂_AP ← β·τ̂_AP + (1 − β)·tx_AP / (B − C)
//! τ̂_i  ← β·τ̂_i  + (1 − β)·tx_i  / (B − C)
//! ```
//!
//! `n^m` is the number of distinct stations heard in the window. Collided
//! slots reveal no sender, so only successful frames count.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scenario::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSettings {
    /// Initial (and, without tuning, fixed) observation window `B` in slots.
    pub window_slots: u64,
    /// Memory `δ` of the contender-count filter.
    pub delta: f64,
    /// Memory `β` of the access-probability filters.
    pub beta: f64,
    pub adaptive_window: bool,
    pub min_window: u64,
    pub max_window: u64,
    /// Consecutive stable checks required before the window shrinks.
    pub hysteresis: u32,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            window_slots: 500,
            delta: 0.7,
            beta: 0.7,
            adaptive_window: false,
            min_window: 100,
            max_window: 4000,
            hysteresis: 4,
        }
    }
}

impl EstimatorSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("delta", self.delta), ("beta", self.beta)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("filter memory {name} must be in [0, 1), got {v}")));
            }
        }
        if self.window_slots == 0 {
            return Err(Error::InvalidParameter("observation window must be at least one slot".into()));
        }
        if self.min_window == 0 || self.min_window > self.max_window {
            return Err(Error::InvalidParameter(format!(
                "window bounds must satisfy 0 < min <= max, got {}..{}",
                self.min_window, self.max_window
            )));
        }
        if self.adaptive_window && !(self.min_window..=self.max_window).contains(&self.window_slots) {
            return Err(Error::InvalidParameter(format!(
                "initial window {} outside [{}, {}]",
                self.window_slots, self.min_window, self.max_window
            )));
        }
        if self.hysteresis == 0 {
            return Err(Error::InvalidParameter("hysteresis must be at least one check".into()));
        }
        Ok(())
    }
}

/// Channel activity seen during one observation window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowObservation {
    pub window_slots: u64,
    /// Distinct stations (not counting the AP) with at least one success.
    pub distinct_transmitters: u64,
    pub ap_successes: u64,
    pub per_station_successes: BTreeMap<NodeId, u64>,
    pub collisions: u64,
    pub idles: u64,
}

impl WindowObservation {
    pub fn validate(&self) -> Result<()> {
        let station_total: u64 = self.per_station_successes.values().sum();
        let accounted = self.collisions + self.idles + station_total + self.ap_successes;
        if accounted != self.window_slots {
            return Err(Error::InvalidParameter(format!(
                "window of {} slots accounts for {accounted}",
                self.window_slots
            )));
        }
        let heard = self.per_station_successes.values().filter(|&&c| c > 0).count() as u64;
        if self.distinct_transmitters > heard {
            return Err(Error::InvalidParameter(format!(
                "{} distinct transmitters but only {heard} stations heard",
                self.distinct_transmitters
            )));
        }
        Ok(())
    }

    fn non_collision_slots(&self) -> u64 {
        self.window_slots - self.collisions
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub n_hat: f64,
    pub tau_ap_hat: f64,
    pub tau_i_hat: BTreeMap<NodeId, f64>,
    pub delta: f64,
    pub beta: f64,
    pub window_slots: u64,
    /// Windows folded in so far.
    pub windows: u64,
}

impl EstimatorState {
    /// Empty state: all estimates zero, no windows processed.
    pub fn new(settings: &EstimatorSettings) -> Self {
        Self {
            n_hat: 0.0,
            tau_ap_hat: 0.0,
            tau_i_hat: BTreeMap::new(),
            delta: settings.delta,
            beta: settings.beta,
            window_slots: settings.window_slots,
            windows: 0,
        }
    }

    /// Applies one filter step.
    pub fn update(&self, obs: &WindowObservation) -> Result<Self> {
        obs.validate()?;
        if obs.window_slots != self.window_slots {
            return Err(Error::InvalidParameter(format!(
                "observation covers {} slots but the estimator window is {}",
                obs.window_slots, self.window_slots
            )));
        }
        let mut next = self.clone();
        next.windows += 1;
        next.n_hat = self.delta * self.n_hat + (1.0 - self.delta) * obs.distinct_transmitters as f64;
        let usable = obs.non_collision_slots();
        if usable == 0 {
            return Ok(next);
        }
        let usable = usable as f64;
        let beta = self.beta;
        next.tau_ap_hat = beta * self.tau_ap_hat + (1.0 - beta) * obs.ap_successes as f64 / usable;
        for est in next.tau_i_hat.values_mut() {
            *est *= beta;
        }
        for (&id, &tx) in &obs.per_station_successes {
            *next.tau_i_hat.entry(id).or_insert(0.0) += (1.0 - beta) * tx as f64 / usable;
        }
        Ok(next)
    }

    /// Like [`update`](Self::update), except that the first window
    /// initialises every estimate to its raw measurement.
    pub fn observe(&self, obs: &WindowObservation) -> Result<Self> {
        if self.windows > 0 {
            return self.update(obs);
        }
        let primed = Self { delta: 0.0, beta: 0.0, ..self.clone() }.update(obs)?;
        Ok(Self { delta: self.delta, beta: self.beta, ..primed })
    }

    pub fn tau_hat(&self, id: NodeId) -> f64 {
        self.tau_i_hat.get(&id).copied().unwrap_or(0.0)
    }

    /// `n̂` rounded to the nearest integer.
    pub fn rounded_n(&self) -> usize {
        self.n_hat.round() as usize
    }

    pub fn with_window(mut self, window_slots: u64) -> Self {
        self.window_slots = window_slots;
        self
    }

    /// Drops the per-station estimate of a station that left.
    pub fn forget(&mut self, id: NodeId) {
        self.tau_i_hat.remove(&id);
    }
}

/// Grows `B` when a longer horizon reveals more transmitters and shrinks it
/// after `H` consecutive checks where it does not.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowTuner {
    min_window: u64,
    max_window: u64,
    hysteresis: u32,
    stable_checks: u32,
}

impl WindowTuner {
    pub fn new(settings: &EstimatorSettings) -> Self {
        Self {
            min_window: settings.min_window,
            max_window: settings.max_window,
            hysteresis: settings.hysteresis,
            stable_checks: 0,
        }
    }

    /// Next window length given the transmitter counts over the last `B`
    /// and `2B` slots.
    pub fn tune(&mut self, counts_b: u64, counts_2b: u64, current_b: u64) -> u64 {
        if counts_2b > counts_b {
            self.stable_checks = 0;
            return (2 * current_b).min(self.max_window);
        }
        if counts_2b == counts_b {
            self.stable_checks += 1;
            if self.stable_checks >= self.hysteresis {
                self.stable_checks = 0;
                return (current_b / 2).max(self.min_window);
            }
        } else {
            self.stable_checks = 0;
        }
        current_b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn obs(b: u64, distinct: u64, ap: u64, stations: &[(u32, u64)], collisions: u64) -> WindowObservation {
        let per: BTreeMap<NodeId, u64> = stations.iter().map(|&(i, c)| (NodeId(i), c)).collect();
        let used: u64 = per.values().sum::<u64>() + ap + collisions;
        WindowObservation {
            window_slots: b,
            distinct_transmitters: distinct,
            ap_successes: ap,
            per_station_successes: per,
            collisions,
            idles: b - used,
        }
    }

    fn state() -> EstimatorState {
        EstimatorState::new(&EstimatorSettings::default())
    }

    #[test]
    fn constant_measurement_closed_form() {
        let o = obs(500, 4, 0, &[(1, 1), (2, 1), (3, 1), (4, 1)], 0);
        let mut s = state();
        for t in 1..=30 {
            s = s.update(&o).unwrap();
            let expected = 4.0 * (1.0 - 0.7f64.powi(t));
            assert!((s.n_hat - expected).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn silent_ap_estimate_is_absorbed_at_zero() {
        let mut s = state();
        s.tau_ap_hat = 0.3;
        let o = obs(500, 1, 0, &[(1, 7)], 3);
        for _ in 0..200 {
            s = s.update(&o).unwrap();
        }
        assert!(s.tau_ap_hat < 1e-20);
        s = s.update(&o).unwrap();
        assert!(s.tau_ap_hat >= 0.0);
    }

    #[test]
    fn measurements_use_non_collision_slots() {
        let o = obs(500, 2, 40, &[(1, 10), (2, 30)], 100);
        let s = state().observe(&o).unwrap();
        assert_eq!(s.tau_ap_hat, 40.0 / 400.0);
        assert_eq!(s.tau_hat(NodeId(1)), 10.0 / 400.0);
        assert_eq!(s.n_hat, 2.0);
        let s2 = s.update(&o).unwrap();
        assert!((s2.tau_ap_hat - 0.1).abs() < 1e-15);
    }

    #[test]
    fn all_collision_window_only_moves_count() {
        let o = WindowObservation { window_slots: 100, collisions: 100, ..Default::default() };
        let mut s = state().with_window(100);
        s.tau_ap_hat = 0.2;
        s.tau_i_hat.insert(NodeId(3), 0.1);
        let s2 = s.update(&o).unwrap();
        assert_eq!(s2.tau_ap_hat, 0.2);
        assert_eq!(s2.tau_hat(NodeId(3)), 0.1);
        assert_eq!(s2.n_hat, 0.0);
        assert_eq!(s2.windows, 1);
    }

    #[test]
    fn unseen_station_decays() {
        let mut s = state();
        s.tau_i_hat.insert(NodeId(9), 0.5);
        let s = s.update(&obs(500, 0, 0, &[], 0)).unwrap();
        assert!((s.tau_hat(NodeId(9)) - 0.35).abs() < 1e-15);
    }

    #[test]
    fn rejects_inconsistent_windows() {
        let mut o = obs(500, 1, 0, &[(1, 5)], 0);
        assert!(state().with_window(400).update(&o).is_err());
        o.idles += 1;
        assert!(state().update(&o).is_err());
        let o = obs(500, 3, 0, &[(1, 5)], 0);
        assert!(state().update(&o).is_err());
    }

    #[test]
    fn priming_sets_raw_measurement() {
        let o = obs(500, 2, 20, &[(1, 3), (4, 1)], 50);
        let s = state().observe(&o).unwrap();
        assert_eq!((s.n_hat, s.delta, s.beta, s.windows), (2.0, 0.7, 0.7, 1));
        assert_eq!(s.tau_hat(NodeId(4)), 1.0 / 450.0);
    }

    proptest! {
        #[test]
        fn two_steps_match_expansion(a in 0u64..30, b in 0u64..30, n0 in 0.0f64..30.0, ap_a in 0u64..100, ap_b in 0u64..100) {
            let mut s = state();
            s.n_hat = n0;
            s.tau_ap_hat = 0.05;
            let singles = |count: u64| (0..count as u32).map(|i| (i, 1)).collect::<Vec<_>>();
            let oa = obs(500, a, ap_a, &singles(a), 10);
            let ob = obs(500, b, ap_b, &singles(b), 20);
            let two = s.update(&oa).unwrap().update(&ob).unwrap();
            let d: f64 = 0.7;
            let expected_n = d * d * n0 + d * (1.0 - d) * a as f64 + (1.0 - d) * b as f64;
            let expected_ap = d * d * 0.05 + d * (1.0 - d) * ap_a as f64 / 490.0 + (1.0 - d) * ap_b as f64 / 480.0;
            prop_assert!((two.n_hat - expected_n).abs() < 1e-12);
            prop_assert!((two.tau_ap_hat - expected_ap).abs() < 1e-15);
        }

        #[test]
        fn tuned_window_stays_in_bounds(seq in prop::collection::vec((0u64..10, 0u64..10), 1..60)) {
            let settings = EstimatorSettings::default();
            let mut tuner = WindowTuner::new(&settings);
            let mut b = settings.window_slots;
            for (x, y) in seq {
                b = tuner.tune(x, y, b);
                prop_assert!((settings.min_window..=settings.max_window).contains(&b));
            }
        }
    }

    #[test]
    fn tuner_grows_clamps_and_shrinks() {
        let settings = EstimatorSettings::default();
        let mut t = WindowTuner::new(&settings);
        assert_eq!(t.tune(2, 4, 500), 1000);
        assert_eq!(t.tune(2, 4, 4000), 4000);
        assert_eq!(t.tune(3, 3, 800), 800);
        assert_eq!(t.tune(3, 3, 800), 800);
        assert_eq!(t.tune(3, 3, 800), 800);
        assert_eq!(t.tune(3, 3, 800), 400);
        // A growth signal resets the stable streak.
        assert_eq!(t.tune(3, 3, 400), 400);
        assert_eq!(t.tune(3, 5, 400), 800);
        for _ in 0..3 {
            assert_eq!(t.tune(5, 5, 800), 800);
        }
        assert_eq!(t.tune(5, 5, 800), 400);
        for _ in 0..4 {
            t.tune(5, 5, 100);
        }
        assert_eq!(t.tune(5, 5, 100), 100);
        let mut t = WindowTuner::new(&settings);
        for _ in 0..3 {
            t.tune(5, 5, 150);
        }
        assert_eq!(t.tune(5, 5, 150), 100);
    }

    #[test]
    fn halving_to_floor_still_hears_everyone() {
        // Four persistent stations at τ = 0.1 with a silent AP: how often does
        // a minimum-size window hear all four?
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (n, tau, b, trials) = (4usize, 0.1, 100u64, 2000);
        let mut full = 0;
        for _ in 0..trials {
            let mut heard = [false; 4];
            for _ in 0..b {
                let tx: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < tau).collect();
                if tx.len() == 1 {
                    heard[tx[0]] = true;
                }
            }
            if heard.iter().all(|&h| h) {
                full += 1;
            }
        }
        assert!(full as f64 / trials as f64 >= 0.95, "{full}/{trials}");
    }
}
