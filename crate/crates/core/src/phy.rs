//! Channel timing profiles.
//!
//! The slotted model only needs three numbers: the empty slot length `σ`,
//! the busy slot length `T` (identical for successes and collisions under
//! basic access with EIFS = ACK timeout + DIFS), and the payload `P` carried
//! by a successful frame. `T` is stored as an opaque constant; the presets
//! were derived offline as
//!
//! ```text
//! T = PPDU(header + payload) + SIFS + ACK PPDU + DIFS
//! ```
//!
//! | preset | σ (μs) | T (μs) | composition                                                 |
//! |--------|--------|--------|-------------------------------------------------------------|
//! | `b11`  | 20     | 1667   | 192 + 1528·8/11 + 10 + (192 + 112) + 50                     |
//! | `g6`   | 20     | 2168   | 20 + 511·4 + 10 + (20 + 6·4) + 50                           |
//! | `n600` | 9      | 147.6  | 48 + 6·3.6 + 16 + (20 + 2·4) + 34                           |
//!
//! All presets carry a 1500 byte payload and a 28 byte MAC header + FCS.

use crate::error::{Error, Result};

/// Names accepted by [`PhyProfile::preset`].
pub const PRESET_NAMES: &[&str] = &["b11", "g6", "n600"];

const PAYLOAD_1500_BYTES: f64 = 12_000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PhyProfile {
    sigma_us: f64,
    busy_us: f64,
    payload_bits: f64,
    label: String,
}

impl PhyProfile {
    pub fn new(sigma_us: f64, busy_us: f64, payload_bits: f64, label: impl Into<String>) -> Result<Self> {
        if !(sigma_us.is_finite() && sigma_us > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma_us}")));
        }
        if !(busy_us.is_finite() && busy_us > sigma_us) {
            return Err(Error::InvalidParameter(format!(
                "busy slot T must exceed sigma ({sigma_us} us), got {busy_us}"
            )));
        }
        if !(payload_bits.is_finite() && payload_bits > 0.0) {
            return Err(Error::InvalidParameter(format!("payload must be positive, got {payload_bits}")));
        }
        Ok(Self { sigma_us, busy_us, payload_bits, label: label.into() })
    }

    /// Looks up one of the registered timing presets.
    pub fn preset(name: &str) -> Result<Self> {
        let (sigma, busy) = match name {
            // 802.11b, 11 Mb/s data, 1 Mb/s ACK, long preamble.
            "b11" => (20.0, 1667.0),
            // 802.11g ERP-OFDM at 6 Mb/s, long slot.
            "g6" => (20.0, 2168.0),
            // 802.11n HT-mixed, 4 streams, 40 MHz, short GI (600 Mb/s).
            "n600" => (9.0, 147.6),
            _ => {
                return Err(Error::UnknownPreset {
                    name: name.to_string(),
                    valid: PRESET_NAMES.join(", "),
                })
            }
        };
        Self::new(sigma, busy, PAYLOAD_1500_BYTES, name)
    }

    pub fn sigma_us(&self) -> f64 {
        self.sigma_us
    }

    pub fn busy_us(&self) -> f64 {
        self.busy_us
    }

    pub fn payload_bits(&self) -> f64 {
        self.payload_bits
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `√(T / 2σ)`, the scale of the throughput-optimal access probability.
    pub fn contention_scale(&self) -> f64 {
        (self.busy_us / (2.0 * self.sigma_us)).sqrt()
    }

    /// Same timing with a different payload. `T` is left untouched.
    pub fn with_payload_bits(&self, payload_bits: f64) -> Result<Self> {
        Self::new(self.sigma_us, self.busy_us, payload_bits, self.label.clone())
    }

    /// Converts "payload bits per microsecond of channel time" into bits/s.
    pub(crate) fn bits_per_second(&self, frames_per_us: f64) -> f64 {
        self.payload_bits * frames_per_us * 1e6
    }
}
