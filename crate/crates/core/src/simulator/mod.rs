//! Seeded slotted-channel simulator.
//!
//! Time advances in slots. In every slot each active contender decides
//! whether to transmit: persistent and adaptive stations flip a coin with
//! their current `τ`, legacy stations and a legacy AP run binary exponential
//! backoff. A lone transmitter succeeds, two or more collide, and an empty
//! slot lasts `σ` instead of `T`.
//!
//! Randomness comes from one ChaCha8 stream per node, one for the AP and one
//! for the arbiter (ACK drops, random addressing), all derived from the
//! seed, so adding a node leaves every other node's draws untouched.

mod engine;
mod observer;

use std::fmt;

use crate::error::Result;
use crate::scenario::{NodeId, Scenario};

pub use engine::run_dynamic;

/// Runs a scenario with fixed membership.
pub fn run(scenario: &Scenario, seed: u64) -> Result<SimResult> {
    run_dynamic(scenario, &[], seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Station,
    Ap,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Station => "station",
            Self::Ap => "ap",
        })
    }
}

/// Totals for one station, counted after the warm-up.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStats {
    pub id: NodeId,
    pub kind: &'static str,
    /// Frames that went through on the channel, including those whose ACK
    /// the AP withheld.
    pub successes: u64,
    pub dropped_acks: u64,
    pub transmissions: u64,
    /// Downlink frames addressed to this station.
    pub downlink_frames: u64,
}

impl NodeStats {
    pub fn delivered(&self) -> u64 {
        self.successes - self.dropped_acks
    }
}

/// One row of the windowed trace.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub window_index: u64,
    /// Channel time at the end of the window.
    pub sim_time_s: f64,
    pub node: Option<NodeId>,
    pub role: Role,
    /// Strategy in force (coin-flip nodes) or the empirical access rate
    /// (backoff nodes) over the window.
    pub tau_applied: f64,
    /// Delivered uplink; the AP row carries the aggregate of all stations.
    pub uplink_bps: f64,
    /// Downlink received; the AP row carries everything the AP sent.
    pub downlink_bps: f64,
    pub n_hat: Option<f64>,
    pub tau_ap_hat: Option<f64>,
    pub active_stations: usize,
    /// A controller had to clamp an unusable value in this window.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub scenario: String,
    pub seed: u64,
    pub payload_bits: f64,
    pub nodes: Vec<NodeStats>,
    pub ap_successes: u64,
    pub ap_transmissions: u64,
    pub collisions: u64,
    pub idles: u64,
    pub total_slots: u64,
    pub elapsed_us: f64,
    pub windows: Vec<WindowRecord>,
}

impl SimResult {
    pub fn node(&self, id: NodeId) -> Option<&NodeStats> {
        self.nodes.iter().find(|n| n.id == id)
    }

    fn rate(&self, frames: u64) -> f64 {
        if self.elapsed_us == 0.0 {
            return 0.0;
        }
        self.payload_bits * frames as f64 / self.elapsed_us * 1e6
    }

    /// Delivered uplink throughput of a station in bits/s.
    pub fn uplink_bps(&self, id: NodeId) -> f64 {
        self.node(id).map_or(0.0, |n| self.rate(n.delivered()))
    }

    pub fn downlink_bps(&self, id: NodeId) -> f64 {
        self.node(id).map_or(0.0, |n| self.rate(n.downlink_frames))
    }

    pub fn ap_bps(&self) -> f64 {
        self.rate(self.ap_successes)
    }

    pub fn aggregate_uplink_bps(&self) -> f64 {
        self.rate(self.nodes.iter().map(NodeStats::delivered).sum())
    }

    /// Delivered uplink plus downlink.
    pub fn total_bps(&self) -> f64 {
        self.aggregate_uplink_bps() + self.ap_bps()
    }

    /// Slot accounting and timing identities.
    pub fn is_consistent(&self, sigma_us: f64, busy_us: f64) -> bool {
        let successes: u64 = self.nodes.iter().map(|n| n.successes).sum();
        let downlink: u64 = self.nodes.iter().map(|n| n.downlink_frames).sum();
        let busy = self.total_slots - self.idles;
        let elapsed = self.idles as f64 * sigma_us + busy as f64 * busy_us;
        self.idles + self.collisions + successes + self.ap_successes == self.total_slots
            && downlink == self.ap_successes
            && (elapsed - self.elapsed_us).abs() <= 1e-9 * elapsed.max(1.0)
            && self.nodes.iter().all(|n| n.dropped_acks <= n.successes && n.successes <= n.transmissions)
    }
}
