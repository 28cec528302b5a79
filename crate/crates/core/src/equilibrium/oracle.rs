//! Brute-force deviation and dominance checks over strategy grids.

use super::design::AckSuppressionDesign;
use crate::analytic::{frame_rates_idle, ApModel, Outcome, TrafficRatio};
use crate::error::{Error, Result};
use crate::phy::PhyProfile;

/// Relative margin below which utility differences count as ties.
pub const TIE_MARGIN: f64 = 1e-9;
pub const MAX_PARETO_STATIONS: usize = 4;
pub const MAX_PARETO_GRID: usize = 60;

/// Everything needed to evaluate a station's utility on an arbitrary outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct GameModel {
    pub k: TrafficRatio,
    pub phy: PhyProfile,
    pub ap: ApModel,
    /// ACK dropping applied to every station's uplink.
    pub punishment: Option<AckSuppressionDesign>,
}

impl GameModel {
    pub fn new(k: TrafficRatio, phy: PhyProfile, ap: ApModel) -> Self {
        Self { k, phy, ap, punishment: None }
    }

    pub fn with_punishment(mut self, design: AckSuppressionDesign) -> Self {
        self.punishment = Some(design);
        self
    }

    /// Utility of station `i` in bits/s.
    pub fn utility(&self, outcome: &Outcome, i: usize) -> f64 {
        self.phy.bits_per_second(self.frame_utility(outcome.taus(), i))
    }

    fn frame_utility(&self, taus: &[f64], i: usize) -> f64 {
        let idle_others: f64 = taus
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, t)| 1.0 - t)
            .product();
        let mut r = frame_rates_idle(taus[i], idle_others, taus.len(), &self.phy, &self.ap);
        if let Some(d) = &self.punishment {
            r.uplink *= 1.0 - d.drop_probability(taus[i]);
        }
        r.utility(self.k)
    }
}

fn improves(candidate: f64, current: f64) -> bool {
    candidate - current > TIE_MARGIN * (1.0 + current.abs())
}

/// `true` iff no station gains more than the tie margin by moving to any
/// of `grid_size` interior grid points or to `0` or `1`.
pub fn verify_ne(outcome: &Outcome, model: &GameModel, grid_size: usize) -> Result<bool> {
    if grid_size < 100 {
        return Err(Error::InvalidParameter(format!("deviation grid needs at least 100 points, got {grid_size}")));
    }
    let step = 1.0 / (grid_size + 1) as f64;
    let candidates: Vec<f64> = std::iter::once(0.0)
        .chain((1..=grid_size).map(|j| j as f64 * step))
        .chain(std::iter::once(1.0))
        .collect();
    let mut taus = outcome.taus().to_vec();
    for i in 0..taus.len() {
        let original = taus[i];
        let current = model.frame_utility(&taus, i);
        for &c in &candidates {
            taus[i] = c;
            if improves(model.frame_utility(&taus, i), current) {
                return Ok(false);
            }
        }
        taus[i] = original;
    }
    Ok(true)
}

/// `true` iff no outcome on the grid `{0, 1/g, …, 1}^n` makes some station
/// strictly better off without making another strictly worse off.
pub fn verify_pareto(outcome: &Outcome, model: &GameModel, grid_size: usize) -> Result<bool> {
    let n = outcome.len();
    if n > MAX_PARETO_STATIONS || grid_size > MAX_PARETO_GRID {
        return Err(Error::InstanceTooLarge(format!(
            "Pareto search supports at most {MAX_PARETO_STATIONS} stations and a grid of {MAX_PARETO_GRID}, \
             got n={n}, grid={grid_size}"
        )));
    }
    if grid_size == 0 {
        return Err(Error::InvalidParameter("Pareto grid must be positive".into()));
    }
    let base: Vec<f64> = (0..n).map(|i| model.frame_utility(outcome.taus(), i)).collect();
    let points = grid_size + 1;
    let mut index = vec![0usize; n];
    let mut taus = vec![0.0; n];
    loop {
        for (t, &j) in taus.iter_mut().zip(&index) {
            *t = j as f64 / grid_size as f64;
        }
        let mut better = false;
        let mut worse = false;
        for (i, &b) in base.iter().enumerate() {
            let u = model.frame_utility(&taus, i);
            better |= improves(u, b);
            worse |= improves(b, u);
            if worse {
                break;
            }
        }
        if better && !worse {
            return Ok(false);
        }
        // Odometer increment over the n-dimensional grid.
        let mut d = 0;
        loop {
            if d == n {
                return Ok(true);
            }
            index[d] += 1;
            if index[d] < points {
                break;
            }
            index[d] = 0;
            d += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{homogeneous_interference, BackoffConfig};
    use crate::equilibrium::{ack_design, homogeneous_ne, social_optimum};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn b11() -> PhyProfile {
        PhyProfile::preset("b11").unwrap()
    }

    fn legacy_model(k: TrafficRatio) -> GameModel {
        GameModel::new(k, b11(), ApModel::Legacy(BackoffConfig::default()))
    }

    const K1: TrafficRatio = TrafficRatio::Finite(1.0);

    #[test]
    fn small_grid_is_rejected() {
        let o = Outcome::homogeneous(2, 0.1).unwrap();
        assert!(verify_ne(&o, &legacy_model(K1), 99).is_err());
    }

    #[test]
    fn pareto_caps() {
        let m = legacy_model(K1);
        let o = Outcome::homogeneous(5, 0.1).unwrap();
        assert!(matches!(verify_pareto(&o, &m, 10), Err(Error::InstanceTooLarge(_))));
        let o = Outcome::homogeneous(2, 0.1).unwrap();
        assert!(matches!(verify_pareto(&o, &m, 61), Err(Error::InstanceTooLarge(_))));
    }

    #[test]
    fn two_saturated_stations_make_everything_an_equilibrium() {
        let m = legacy_model(K1);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n = rng.random_range(2..=6);
            let mut taus: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let a = rng.random_range(0..n);
            let b = (a + rng.random_range(1..n)) % n;
            taus[a] = 1.0;
            taus[b] = 1.0;
            assert!(verify_ne(&Outcome::new(taus.clone()).unwrap(), &m, 100).unwrap(), "{taus:?}");
        }
    }

    #[test]
    fn uplink_only_equilibria_have_exactly_one_saturated_station() {
        let m = GameModel::new(TrafficRatio::Infinite, b11(), ApModel::Absent);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let x = rng.random::<f64>();
            assert!(verify_ne(&Outcome::new(vec![x, 1.0]).unwrap(), &m, 100).unwrap());
            assert!(verify_ne(&Outcome::new(vec![1.0, x]).unwrap(), &m, 100).unwrap());
            let y = rng.random_range(0.01..0.99);
            assert!(!verify_ne(&Outcome::new(vec![x.clamp(0.01, 0.99), y]).unwrap(), &m, 100).unwrap());
        }
    }

    #[test]
    fn homogeneous_equilibrium_passes_and_perturbation_fails() {
        for n in [2usize, 5, 10] {
            let m = legacy_model(K1);
            let t = homogeneous_ne(n, K1, &m.ap).unwrap();
            let o = Outcome::homogeneous(n, t).unwrap();
            assert!(verify_ne(&o, &m, 1000).unwrap(), "n={n}");
            assert!(!verify_ne(&o.with_strategy(0, t + 0.1), &m, 1000).unwrap(), "n={n}");
        }
    }

    #[test]
    fn no_heterogeneous_equilibria_for_three_stations() {
        let m = legacy_model(K1);
        let g = 25;
        let level = |j: usize| j as f64 / (g + 1) as f64;
        for a in 1..=g {
            for b in 1..=g {
                for c in 1..=g {
                    let (lo, hi) = (a.min(b).min(c), a.max(b).max(c));
                    if hi - lo < 2 {
                        continue;
                    }
                    let o = Outcome::new(vec![level(a), level(b), level(c)]).unwrap();
                    assert!(!verify_ne(&o, &m, 100).unwrap(), "({a}, {b}, {c})");
                }
            }
        }
    }

    #[test]
    fn social_optimum_is_pareto_and_neighbours_are_not() {
        let m = legacy_model(K1);
        let r = social_optimum(2, K1, &m.phy, &m.ap).unwrap();
        let t = r.tau_prime;
        let grid = 50;
        assert!(verify_pareto(&Outcome::homogeneous(2, t).unwrap(), &m, grid).unwrap());
        let shifted = Outcome::new(vec![t + 2.0 / grid as f64, t]).unwrap();
        assert!(!verify_pareto(&shifted, &m, grid).unwrap());
    }

    #[test]
    fn saturated_uplink_only_outcome_is_dominated() {
        let m = legacy_model(TrafficRatio::Infinite);
        assert!(!verify_pareto(&Outcome::homogeneous(2, 1.0).unwrap(), &m, 50).unwrap());
    }

    #[test]
    fn punished_best_response_is_threshold() {
        let phy = b11();
        for n in [2usize, 5, 10, 20] {
            let d = ack_design(n, &phy);
            let m = GameModel::new(TrafficRatio::Infinite, phy.clone(), ApModel::Absent).with_punishment(d);
            let p = homogeneous_interference(d.gamma, n);
            let u = |t: f64| super::super::ack_utility(t, p, &d, &phy);
            let grid = 10_000;
            let best = (0..=grid)
                .map(|j| j as f64 / grid as f64)
                .chain(std::iter::once(d.gamma))
                .max_by(|a, b| u(*a).total_cmp(&u(*b)))
                .unwrap();
            assert_eq!(best, d.gamma, "n={n}");
            // The same design makes the homogeneous threshold outcome an equilibrium.
            let o = Outcome::homogeneous(n, d.gamma).unwrap();
            assert!(verify_ne(&o, &m, 1000).unwrap(), "n={n}");
            assert!((m.utility(&o, 0) - u(d.gamma)).abs() < 1e-9 * u(d.gamma));
        }
    }
}
