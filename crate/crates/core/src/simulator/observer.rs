use std::collections::BTreeMap;

use crate::error::Result;
use crate::estimators::{EstimatorSettings, EstimatorState, WindowObservation, WindowTuner};
use crate::scenario::NodeId;

/// Run-wide cumulative slot counters.
#[derive(Debug, Clone, Default)]
pub(crate) struct Counters {
    pub slot: u64,
    pub idles: u64,
    pub collisions: u64,
    pub ap_successes: u64,
    pub ap_transmissions: u64,
    /// Indexed by station slot in the engine, in join order.
    pub successes: Vec<u64>,
    pub dropped: Vec<u64>,
    pub transmissions: Vec<u64>,
    pub downlink: Vec<u64>,
}

impl Counters {
    pub fn elapsed_us(&self, sigma: f64, busy: f64) -> f64 {
        self.idles as f64 * sigma + (self.slot - self.idles) as f64 * busy
    }

    pub fn add_station(&mut self) {
        self.successes.push(0);
        self.dropped.push(0);
        self.transmissions.push(0);
        self.downlink.push(0);
    }
}

pub(crate) fn since(now: &[u64], then: &[u64], i: usize) -> u64 {
    now[i] - then.get(i).copied().unwrap_or(0)
}

/// Estimator plus the bookkeeping needed to cut the channel into windows.
#[derive(Debug, Clone)]
pub(crate) struct Observer {
    pub est: EstimatorState,
    tuner: Option<WindowTuner>,
    start: Counters,
    previous: Option<Counters>,
}

impl Observer {
    pub fn new(settings: &EstimatorSettings, now: &Counters) -> Self {
        Self {
            est: EstimatorState::new(settings),
            tuner: settings.adaptive_window.then(|| WindowTuner::new(settings)),
            start: now.clone(),
            previous: None,
        }
    }

    pub fn due(&self, now: &Counters) -> bool {
        now.slot - self.start.slot >= self.est.window_slots
    }

    /// Folds the window that just ended into the estimator.
    pub fn close(&mut self, now: &Counters, ids: &[NodeId]) -> Result<()> {
        let mut per_station = BTreeMap::new();
        for (i, &id) in ids.iter().enumerate() {
            let c = since(&now.successes, &self.start.successes, i);
            if c > 0 {
                per_station.insert(id, c);
            }
        }
        let obs = WindowObservation {
            window_slots: now.slot - self.start.slot,
            distinct_transmitters: per_station.len() as u64,
            ap_successes: now.ap_successes - self.start.ap_successes,
            per_station_successes: per_station,
            collisions: now.collisions - self.start.collisions,
            idles: now.idles - self.start.idles,
        };
        self.est = self.est.observe(&obs)?;
        if let (Some(tuner), Some(prev)) = (self.tuner.as_mut(), self.previous.as_ref()) {
            let b = obs.window_slots;
            if self.start.slot - prev.slot == b {
                let heard_2b = (0..ids.len()).filter(|&i| since(&now.successes, &prev.successes, i) > 0).count();
                let next = tuner.tune(obs.distinct_transmitters, heard_2b as u64, b);
                self.est.window_slots = next;
            }
        }
        self.previous = Some(std::mem::replace(&mut self.start, now.clone()));
        Ok(())
    }
}
