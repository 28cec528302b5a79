//! Game-theoretic analysis of slotted contention access in infrastructure
//! WLANs.
//!
//! Stations are modelled as players choosing a per-slot access probability
//! `τ`. The crate provides:
//!
//! * [`phy`]: channel timing profiles (empty/busy slot durations, payload),
//! * [`analytic`]: the closed-form legacy backoff response and the
//!   uplink/downlink throughput and utility model,
//! * [`equilibrium`]: best responses, Nash equilibria, social optima and the
//!   two access-point mechanism designs (fixed `τ_AP` and ACK suppression),
//! * [`estimators`] and [`adaptation`]: the online load estimators and the
//!   closed-loop controllers that realise those designs at run time,
//! * [`simulator`]: a deterministic seeded slotted-channel simulator used to
//!   validate all of the above.

pub mod adaptation;
pub mod analytic;
pub mod equilibrium;
mod error;
pub mod estimators;
pub mod phy;
pub mod scenario;
pub mod simulator;

pub use analytic::{ApModel, BackoffConfig, Outcome, StationRates, TrafficRatio};
pub use error::{Error, Result};
pub use phy::PhyProfile;
pub use scenario::{NodeId, Scenario};
