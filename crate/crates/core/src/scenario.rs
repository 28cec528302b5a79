//! Experiment descriptions consumed by the simulator.

use std::collections::BTreeSet;
use std::fmt;

use crate::adaptation::ControllerConfig;
use crate::analytic::{BackoffConfig, TrafficRatio};
use crate::equilibrium::AckSuppressionDesign;
use crate::error::{Error, Result};
use crate::estimators::EstimatorSettings;
use crate::phy::PhyProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// How an adaptive station picks its strategy at each window boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdaptivePolicy {
    /// Best response to `τ_AP`, either estimated or announced by the AP.
    BestResponse { known_ap_tau: Option<f64> },
    /// Threshold `1/(n̂·√(T/2σ))` enforced by an ACK-suppressing AP.
    AckThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeModel {
    Persistent { tau: f64 },
    Legacy { cfg: BackoffConfig },
    Adaptive(AdaptivePolicy),
}

impl NodeModel {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Persistent { .. } => "persistent",
            Self::Legacy { .. } => "legacy",
            Self::Adaptive(AdaptivePolicy::BestResponse { .. }) => "adaptive",
            Self::Adaptive(AdaptivePolicy::AckThreshold) => "adaptive-ack",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub model: NodeModel,
}

impl NodeSpec {
    pub fn new(id: u32, model: NodeModel) -> Self {
        Self { id: NodeId(id), model }
    }
}

/// Where the ACK-suppression parameters come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AckDesignSource {
    Fixed(AckSuppressionDesign),
    /// Recomputed from `round(n̂)` at every window.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApMode {
    None,
    Legacy { cfg: BackoffConfig },
    Fixed { tau_ap: f64 },
    /// Tunes `τ_AP` online to the designed equilibrium for the scenario `k`.
    Designer { tau_floor: f64 },
    /// Drops ACKs of stations above the threshold. With `downlink` set the AP
    /// also contends as a legacy node with the default backoff.
    AckSuppressor { design: AckDesignSource, downlink: bool },
}

impl ApMode {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Legacy { .. } => "legacy",
            Self::Fixed { .. } => "fixed",
            Self::Designer { .. } => "designer",
            Self::AckSuppressor { .. } => "ack-suppressor",
        }
    }
}

/// Station that receives each downlink frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Addressing {
    /// Cycles through active stations in join order.
    #[default]
    RoundRobin,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Duration {
    Slots(u64),
    /// Channel time; the run stops at the first slot boundary past it.
    Seconds(f64),
}

impl Duration {
    pub fn is_zero(&self) -> bool {
        match *self {
            Self::Slots(s) => s == 0,
            Self::Seconds(s) => s == 0.0,
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if let Self::Seconds(s) = *self {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::Scenario(format!("{what} must be a non-negative number of seconds, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventAction {
    Join(Vec<NodeSpec>),
    Leave(Vec<NodeId>),
}

/// Membership change applied at the first slot boundary at or after
/// `time_s` seconds of channel time (warm-up included).
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time_s: f64,
    pub action: EventAction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub phy: PhyProfile,
    pub nodes: Vec<NodeSpec>,
    pub ap: ApMode,
    /// Traffic ratio `k` plus the clamps used by adaptive stations.
    pub controller: ControllerConfig,
    pub duration: Duration,
    /// Initial period excluded from the totals.
    pub warmup: Duration,
    pub seed: u64,
    pub estimator: EstimatorSettings,
    pub addressing: Addressing,
}

impl Scenario {
    /// A scenario with no nodes, no AP, `k = 1` and default settings.
    pub fn new(name: impl Into<String>, phy: PhyProfile) -> Self {
        Self {
            name: name.into(),
            phy,
            nodes: Vec::new(),
            ap: ApMode::None,
            controller: ControllerConfig::new(TrafficRatio::Finite(1.0)),
            duration: Duration::Slots(100_000),
            warmup: Duration::Slots(0),
            seed: 1,
            estimator: EstimatorSettings::default(),
            addressing: Addressing::RoundRobin,
        }
    }

    pub fn k(&self) -> TrafficRatio {
        self.controller.k
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Scenario(e.to_string());
        self.controller.validate().map_err(wrap)?;
        self.estimator.validate().map_err(wrap)?;
        self.duration.validate("duration")?;
        self.warmup.validate("warmup")?;
        if self.duration.is_zero() {
            return Err(Error::Scenario("duration must cover at least one slot".into()));
        }
        let mut ids = BTreeSet::new();
        for node in &self.nodes {
            if !ids.insert(node.id) {
                return Err(Error::Scenario(format!("duplicate node id {}", node.id)));
            }
            validate_model(&node.model)?;
        }
        match self.ap {
            ApMode::Fixed { tau_ap } if !(0.0..=1.0).contains(&tau_ap) => {
                Err(Error::Scenario(format!("fixed tau_ap {tau_ap} outside [0, 1]")))
            }
            ApMode::Designer { tau_floor } if !(tau_floor > 0.0 && tau_floor < 1.0) => {
                Err(Error::Scenario(format!("designer tau_floor {tau_floor} outside (0, 1)")))
            }
            ApMode::Designer { .. } if self.k().is_infinite() => {
                Err(Error::Scenario("the tau_ap designer needs a finite k".into()))
            }
            _ => Ok(()),
        }
    }

    /// Checks an event list against this scenario without running it.
    pub fn validate_events(&self, events: &[Event]) -> Result<()> {
        let mut present: BTreeSet<NodeId> = self.nodes.iter().map(|n| n.id).collect();
        let mut ever: BTreeSet<NodeId> = present.clone();
        let horizon = match (self.duration, self.warmup) {
            (Duration::Seconds(d), Duration::Seconds(w)) => Some(d + w),
            (Duration::Seconds(d), Duration::Slots(0)) => Some(d),
            _ => None,
        };
        let mut last = 0.0;
        for (i, ev) in events.iter().enumerate() {
            if !(ev.time_s.is_finite() && ev.time_s >= 0.0) {
                return Err(Error::Scenario(format!("event {i}: invalid time {}", ev.time_s)));
            }
            if ev.time_s < last {
                return Err(Error::Scenario(format!(
                    "event {i}: time {} precedes the previous event at {last}",
                    ev.time_s
                )));
            }
            if horizon.is_some_and(|h| ev.time_s > h) {
                return Err(Error::Scenario(format!("event {i}: time {} beyond the end of the run", ev.time_s)));
            }
            last = ev.time_s;
            match &ev.action {
                EventAction::Join(specs) => {
                    for spec in specs {
                        if !ever.insert(spec.id) {
                            return Err(Error::Scenario(format!("event {i}: node id {} already used", spec.id)));
                        }
                        validate_model(&spec.model)?;
                        present.insert(spec.id);
                    }
                }
                EventAction::Leave(ids) => {
                    for id in ids {
                        if !present.remove(id) {
                            return Err(Error::Scenario(format!("event {i}: node {id} is not present")));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn validate_model(model: &NodeModel) -> Result<()> {
    match *model {
        NodeModel::Persistent { tau } if !(0.0..=1.0).contains(&tau) => {
            Err(Error::Scenario(format!("persistent tau {tau} outside [0, 1]")))
        }
        NodeModel::Adaptive(AdaptivePolicy::BestResponse { known_ap_tau: Some(v) }) if !(0.0..=1.0).contains(&v) => {
            Err(Error::Scenario(format!("announced tau_ap {v} outside [0, 1]")))
        }
        _ => Ok(()),
    }
}
