use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::observer::{since, Counters, Observer};
use super::{NodeStats, Role, SimResult, WindowRecord};
use crate::adaptation::{ack_suppressor_step, ap_design_step, station_ack_response_step, station_best_response_step, Step};
use crate::analytic::{legacy_response, BackoffConfig};
use crate::equilibrium::{ack_design, AckSuppressionDesign};
use crate::error::Result;
use crate::scenario::{
    AckDesignSource, AdaptivePolicy, Addressing, ApMode, Duration, Event, EventAction, NodeId, NodeModel, NodeSpec,
    Scenario,
};

const AP_STREAM: u64 = 0;
const ARBITER_STREAM: u64 = 1;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Binary exponential backoff counter.
#[derive(Debug, Clone)]
struct Backoff {
    cfg: BackoffConfig,
    stage: u32,
    counter: u32,
}

impl Backoff {
    fn new(cfg: BackoffConfig, rng: &mut ChaCha8Rng) -> Self {
        let counter = rng.random_range(0..cfg.window(0));
        Self { cfg, stage: 0, counter }
    }

    fn after_slot(&mut self, transmitted: bool, delivered: bool, rng: &mut ChaCha8Rng) {
        if !transmitted {
            self.counter -= 1;
            return;
        }
        self.stage = if delivered { 0 } else { self.stage + 1 };
        if self.stage > self.cfg.retry_limit() {
            // Retry limit hit: the frame is discarded and the next one starts fresh.
            self.stage = 0;
        }
        self.counter = rng.random_range(0..self.cfg.window(self.stage));
    }
}

#[derive(Debug, Clone)]
enum Access {
    Coin(f64),
    Backoff(Backoff),
}

impl Access {
    fn wants(&self, rng: &mut ChaCha8Rng) -> bool {
        match self {
            Self::Coin(tau) => rng.random::<f64>() < *tau,
            Self::Backoff(b) => b.counter == 0,
        }
    }

    fn after_slot(&mut self, transmitted: bool, delivered: bool, rng: &mut ChaCha8Rng) {
        if let Self::Backoff(b) = self {
            b.after_slot(transmitted, delivered, rng);
        }
    }

    fn coin(&self) -> Option<f64> {
        match self {
            Self::Coin(t) => Some(*t),
            Self::Backoff(_) => None,
        }
    }
}

struct Station {
    id: NodeId,
    model: NodeModel,
    access: Access,
    rng: ChaCha8Rng,
    active: bool,
    observer: Option<Observer>,
    windows_since_update: u32,
    flagged: bool,
}

struct Ap {
    access: Option<Access>,
    rng: ChaCha8Rng,
    observer: Option<Observer>,
    design: Option<AckSuppressionDesign>,
    flagged: bool,
}

struct Engine<'a> {
    sc: &'a Scenario,
    seed: u64,
    stations: Vec<Station>,
    ids: Vec<NodeId>,
    ap: Ap,
    arbiter: ChaCha8Rng,
    c: Counters,
    transmitters: Vec<usize>,
    report_start: Counters,
    windows: Vec<WindowRecord>,
}

/// Default access probability of an adaptive station before its first
/// window completes.
fn initial_adaptive_tau() -> f64 {
    legacy_response(0.0, &BackoffConfig::default())
}

impl<'a> Engine<'a> {
    fn new(sc: &'a Scenario, seed: u64) -> Self {
        let mut ap_rng = stream(seed, AP_STREAM);
        let c = Counters::default();
        let access = match sc.ap {
            ApMode::None | ApMode::AckSuppressor { downlink: false, .. } => None,
            ApMode::Legacy { cfg } => Some(Access::Backoff(Backoff::new(cfg, &mut ap_rng))),
            ApMode::AckSuppressor { downlink: true, .. } => {
                Some(Access::Backoff(Backoff::new(BackoffConfig::default(), &mut ap_rng)))
            }
            ApMode::Fixed { tau_ap } => Some(Access::Coin(tau_ap)),
            ApMode::Designer { tau_floor } => {
                let k = sc.k().value();
                let tau = 1.0 / ((1.0 + k) * sc.phy.contention_scale());
                Some(Access::Coin(tau.clamp(tau_floor, 1.0)))
            }
        };
        let observer = matches!(sc.ap, ApMode::Designer { .. } | ApMode::AckSuppressor { .. })
            .then(|| Observer::new(&sc.estimator, &c));
        let design = match sc.ap {
            ApMode::AckSuppressor { design: AckDesignSource::Fixed(d), .. } => Some(d),
            _ => None,
        };
        let mut engine = Self {
            sc,
            seed,
            stations: Vec::new(),
            ids: Vec::new(),
            ap: Ap { access, rng: ap_rng, observer, design, flagged: false },
            arbiter: stream(seed, ARBITER_STREAM),
            c,
            transmitters: Vec::new(),
            report_start: Counters::default(),
            windows: Vec::new(),
        };
        for spec in &sc.nodes {
            engine.join(spec);
        }
        engine.report_start = engine.c.clone();
        engine
    }

    fn join(&mut self, spec: &NodeSpec) {
        let mut rng = stream(self.seed, u64::from(spec.id.0) + 2);
        let (access, observer) = match spec.model {
            NodeModel::Persistent { tau } => (Access::Coin(tau), None),
            NodeModel::Legacy { cfg } => (Access::Backoff(Backoff::new(cfg, &mut rng)), None),
            NodeModel::Adaptive(_) => {
                (Access::Coin(initial_adaptive_tau()), Some(Observer::new(&self.sc.estimator, &self.c)))
            }
        };
        self.stations.push(Station {
            id: spec.id,
            model: spec.model,
            access,
            rng,
            active: true,
            observer,
            windows_since_update: 0,
            flagged: false,
        });
        self.ids.push(spec.id);
        self.c.add_station();
    }

    fn leave(&mut self, id: NodeId) {
        if let Some(s) = self.stations.iter_mut().find(|s| s.id == id && s.active) {
            s.active = false;
        }
        if let Some(obs) = self.ap.observer.as_mut() {
            obs.est.forget(id);
        }
    }

    fn elapsed_us(&self) -> f64 {
        self.c.elapsed_us(self.sc.phy.sigma_us(), self.sc.phy.busy_us())
    }

    fn drop_probability(&self, idx: usize) -> f64 {
        let (Some(obs), ApMode::AckSuppressor { .. }) = (&self.ap.observer, self.sc.ap) else {
            return 0.0;
        };
        match &self.ap.design {
            Some(d) => ack_suppressor_step(&obs.est, d, self.stations[idx].id),
            None => 0.0,
        }
    }

    fn addressee(&mut self) -> usize {
        let active: Vec<usize> = (0..self.stations.len()).filter(|&i| self.stations[i].active).collect();
        let pick = match self.sc.addressing {
            Addressing::RoundRobin => (self.c.ap_successes % active.len() as u64) as usize,
            Addressing::Random => self.arbiter.random_range(0..active.len()),
        };
        active[pick]
    }

    fn step(&mut self) {
        self.transmitters.clear();
        for (i, s) in self.stations.iter_mut().enumerate() {
            if s.active && s.access.wants(&mut s.rng) {
                self.transmitters.push(i);
            }
        }
        let any_station = self.stations.iter().any(|s| s.active);
        let ap_tx = match self.ap.access.as_ref() {
            Some(a) if any_station => a.wants(&mut self.ap.rng),
            _ => false,
        };
        for &i in &self.transmitters {
            self.c.transmissions[i] += 1;
        }
        if ap_tx {
            self.c.ap_transmissions += 1;
        }

        let contenders = self.transmitters.len() + usize::from(ap_tx);
        let mut delivered_station = None;
        let mut ap_delivered = false;
        match contenders {
            0 => self.c.idles += 1,
            1 if ap_tx => {
                let to = self.addressee();
                self.c.downlink[to] += 1;
                self.c.ap_successes += 1;
                ap_delivered = true;
            }
            1 => {
                let i = self.transmitters[0];
                self.c.successes[i] += 1;
                let p = self.drop_probability(i);
                if p > 0.0 && self.arbiter.random::<f64>() < p {
                    self.c.dropped[i] += 1;
                } else {
                    delivered_station = Some(i);
                }
            }
            _ => self.c.collisions += 1,
        }

        let mut t = 0;
        for (i, s) in self.stations.iter_mut().enumerate() {
            if !s.active {
                continue;
            }
            let transmitted = self.transmitters.get(t) == Some(&i);
            if transmitted {
                t += 1;
            }
            s.access.after_slot(transmitted, delivered_station == Some(i), &mut s.rng);
        }
        if let Some(a) = self.ap.access.as_mut() {
            if any_station {
                a.after_slot(ap_tx, ap_delivered, &mut self.ap.rng);
            }
        }
        self.c.slot += 1;
    }

    fn close_windows(&mut self) -> Result<()> {
        let sc = self.sc;
        for s in self.stations.iter_mut().filter(|s| s.active) {
            let Some(obs) = s.observer.as_mut() else { continue };
            if !obs.due(&self.c) {
                continue;
            }
            obs.close(&self.c, &self.ids)?;
            s.windows_since_update += 1;
            if s.windows_since_update < sc.controller.update_every {
                continue;
            }
            s.windows_since_update = 0;
            let step = match s.model {
                NodeModel::Adaptive(AdaptivePolicy::BestResponse { known_ap_tau }) => {
                    station_best_response_step(&obs.est, &sc.controller, known_ap_tau)?
                }
                NodeModel::Adaptive(AdaptivePolicy::AckThreshold) => {
                    station_ack_response_step(&obs.est, &sc.controller, &sc.phy)?
                }
                _ => unreachable!("only adaptive stations carry an observer"),
            };
            s.access = Access::Coin(step.tau);
            s.flagged = step.flagged;
        }

        if let Some(obs) = self.ap.observer.as_mut() {
            if obs.due(&self.c) {
                obs.close(&self.c, &self.ids)?;
                match sc.ap {
                    ApMode::Designer { tau_floor } => {
                        let previous = self.ap.access.as_ref().and_then(Access::coin).unwrap_or(tau_floor);
                        let Step { tau, flagged } = ap_design_step(&obs.est, sc.k(), &sc.phy, previous, tau_floor)?;
                        self.ap.access = Some(Access::Coin(tau));
                        self.ap.flagged = flagged;
                    }
                    ApMode::AckSuppressor { design: AckDesignSource::Estimated, .. } => {
                        self.ap.design = Some(ack_design(obs.est.rounded_n().max(1), &sc.phy));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn report(&mut self, index: u64) {
        let (sigma, busy) = (self.sc.phy.sigma_us(), self.sc.phy.busy_us());
        let start = &self.report_start;
        let slots = self.c.slot - start.slot;
        let dt = self.c.elapsed_us(sigma, busy) - start.elapsed_us(sigma, busy);
        let bps = |frames: u64| self.sc.phy.payload_bits() * frames as f64 / dt * 1e6;
        let sim_time_s = self.c.elapsed_us(sigma, busy) * 1e-6;
        let active = self.stations.iter().filter(|s| s.active).count();
        let mut aggregate = 0;
        for (i, s) in self.stations.iter().enumerate() {
            let delivered =
                since(&self.c.successes, &start.successes, i) - since(&self.c.dropped, &start.dropped, i);
            aggregate += delivered;
            if !s.active {
                continue;
            }
            let tx = since(&self.c.transmissions, &start.transmissions, i);
            let est = s.observer.as_ref().filter(|o| o.est.windows > 0).map(|o| &o.est);
            self.windows.push(WindowRecord {
                window_index: index,
                sim_time_s,
                node: Some(s.id),
                role: Role::Station,
                tau_applied: s.access.coin().unwrap_or(tx as f64 / slots as f64),
                uplink_bps: bps(delivered),
                downlink_bps: bps(since(&self.c.downlink, &start.downlink, i)),
                n_hat: est.map(|e| e.n_hat),
                tau_ap_hat: est.map(|e| e.tau_ap_hat),
                active_stations: active,
                flagged: s.flagged,
            });
        }
        if !matches!(self.sc.ap, ApMode::None) {
            let tx = self.c.ap_transmissions - start.ap_transmissions;
            let est = self.ap.observer.as_ref().filter(|o| o.est.windows > 0).map(|o| &o.est);
            let tau_applied = self.ap.access.as_ref().and_then(Access::coin).unwrap_or(tx as f64 / slots as f64);
            self.windows.push(WindowRecord {
                window_index: index,
                sim_time_s,
                node: None,
                role: Role::Ap,
                tau_applied,
                uplink_bps: bps(aggregate),
                downlink_bps: bps(self.c.ap_successes - start.ap_successes),
                n_hat: est.map(|e| e.n_hat),
                tau_ap_hat: est.map(|e| e.tau_ap_hat),
                active_stations: active,
                flagged: self.ap.flagged,
            });
        }
        self.report_start = self.c.clone();
    }

    fn result(&self, warm: &Counters) -> SimResult {
        let (sigma, busy) = (self.sc.phy.sigma_us(), self.sc.phy.busy_us());
        let nodes = self
            .stations
            .iter()
            .enumerate()
            .map(|(i, s)| NodeStats {
                id: s.id,
                kind: s.model.kind(),
                successes: since(&self.c.successes, &warm.successes, i),
                dropped_acks: since(&self.c.dropped, &warm.dropped, i),
                transmissions: since(&self.c.transmissions, &warm.transmissions, i),
                downlink_frames: since(&self.c.downlink, &warm.downlink, i),
            })
            .collect();
        SimResult {
            scenario: self.sc.name.clone(),
            seed: self.seed,
            payload_bits: self.sc.phy.payload_bits(),
            nodes,
            ap_successes: self.c.ap_successes - warm.ap_successes,
            ap_transmissions: self.c.ap_transmissions - warm.ap_transmissions,
            collisions: self.c.collisions - warm.collisions,
            idles: self.c.idles - warm.idles,
            total_slots: self.c.slot - warm.slot,
            elapsed_us: self.c.elapsed_us(sigma, busy) - warm.elapsed_us(sigma, busy),
            windows: self.windows.clone(),
        }
    }
}

fn reached(d: Duration, slots: u64, elapsed_us: f64) -> bool {
    match d {
        Duration::Slots(n) => slots >= n,
        Duration::Seconds(s) => elapsed_us >= s * 1e6,
    }
}

/// Runs a scenario, applying membership changes as their times come up.
pub fn run_dynamic(scenario: &Scenario, events: &[Event], seed: u64) -> Result<SimResult> {
    scenario.validate()?;
    scenario.validate_events(events)?;
    let mut engine = Engine::new(scenario, seed);
    let (sigma, busy) = (scenario.phy.sigma_us(), scenario.phy.busy_us());
    let report_every = scenario.estimator.window_slots;
    let mut pending = events.iter().peekable();
    let mut warm: Option<Counters> = None;
    let mut report_index = 0;
    loop {
        let now = engine.elapsed_us();
        while let Some(ev) = pending.next_if(|ev| ev.time_s * 1e6 <= now) {
            match &ev.action {
                EventAction::Join(specs) => specs.iter().for_each(|s| engine.join(s)),
                EventAction::Leave(ids) => ids.iter().for_each(|&id| engine.leave(id)),
            }
        }
        if warm.is_none() && reached(scenario.warmup, engine.c.slot, now) {
            warm = Some(engine.c.clone());
        }
        if let Some(w) = &warm {
            if reached(scenario.duration, engine.c.slot - w.slot, now - w.elapsed_us(sigma, busy)) {
                break;
            }
        }
        engine.step();
        engine.close_windows()?;
        if engine.c.slot - engine.report_start.slot >= report_every {
            engine.report(report_index);
            report_index += 1;
        }
    }
    let warm = warm.expect("the loop only exits after the warm-up");
    Ok(engine.result(&warm))
}
