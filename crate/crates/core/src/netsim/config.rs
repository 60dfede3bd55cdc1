use crate::protocol::QosClass;

use super::SimError;

/// One of the two transmit power levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RangeLevel {
    Short,
    Long,
}

impl RangeLevel {
    /// Normal and reliable traffic stays on the low power level; the
    /// delay-sensitive classes transmit at the high one.
    pub fn for_qos(qos: QosClass) -> RangeLevel {
        if qos.is_delay_sensitive() {
            RangeLevel::Long
        } else {
            RangeLevel::Short
        }
    }
}

/// Parameters of a single simulation run. Units: meters, seconds, joules,
/// bits.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub side: f64,
    pub short_range: f64,
    pub long_range: f64,
    pub seed: u64,
    pub e_init: f64,
    pub e_threshold: f64,
    /// Electronics energy per bit, for both transmit and receive.
    pub e_elec: f64,
    /// Amplifier energy per bit per square meter.
    pub eps_amp: f64,
    pub packet_bits: u32,
    pub ack_bits: u32,
    /// Air time of one data packet; acknowledgments take
    /// `service_time * ack_bits / packet_bits`.
    pub service_time: f64,
    pub ack_timeout: f64,
    /// Replies of the delay-sensitive reliable class older than this are
    /// discarded.
    pub delay_bound: f64,
    pub copies_per_query: usize,
    pub sources: usize,
    pub failure_fraction: f64,
    /// Hop budget of a reply; `None` means `4 * n`.
    pub ttl: Option<u32>,
    /// Fixed sink position; drawn like every other node when `None`.
    pub sink_position: Option<(f64, f64)>,
    /// Power level at which a generated topology must be connected.
    pub connectivity: RangeLevel,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 50,
            side: 70.0,
            short_range: 15.0,
            long_range: 30.0,
            seed: 1,
            e_init: 0.5,
            e_threshold: 0.01,
            e_elec: 50e-9,
            eps_amp: 100e-12,
            packet_bits: 1000,
            ack_bits: 200,
            service_time: 0.004,
            ack_timeout: 0.05,
            delay_bound: 0.1,
            copies_per_query: 3,
            sources: 3,
            failure_fraction: 0.0,
            ttl: None,
            sink_position: None,
            connectivity: RangeLevel::Short,
        }
    }
}

impl SimConfig {
    pub fn range(&self, level: RangeLevel) -> f64 {
        match level {
            RangeLevel::Short => self.short_range,
            RangeLevel::Long => self.long_range,
        }
    }

    pub fn effective_ttl(&self) -> u32 {
        self.ttl.unwrap_or((4 * self.n) as u32)
    }

    pub fn ack_time(&self) -> f64 {
        self.service_time * f64::from(self.ack_bits) / f64::from(self.packet_bits)
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.side > 0.0) {
            return bad(format!("side must be positive, got {}", self.side));
        }
        if !(self.short_range > 0.0 && self.short_range < self.long_range) {
            return bad(format!(
                "ranges must satisfy 0 < short ({}) < long ({})",
                self.short_range, self.long_range
            ));
        }
        if !(0.0..1.0).contains(&self.failure_fraction) {
            return bad(format!("failure fraction must be in [0, 1), got {}", self.failure_fraction));
        }
        if !(self.e_init > 0.0) || self.e_threshold < 0.0 || self.e_elec < 0.0 || self.eps_amp < 0.0 {
            return bad("energy parameters must be non-negative and e_init positive".into());
        }
        if self.packet_bits == 0 {
            return bad("packet_bits must be positive".into());
        }
        if !(self.service_time > 0.0) || !(self.ack_timeout > 0.0) || !(self.delay_bound > 0.0) {
            return bad("timing parameters must be positive".into());
        }
        if self.ack_timeout <= self.service_time + self.ack_time() {
            return bad("ack_timeout must exceed one data plus acknowledgment exchange".into());
        }
        if self.sources == 0 || self.sources >= self.n {
            return bad(format!("need 1 <= sources < n, got {} sources for n={}", self.sources, self.n));
        }
        if self.copies_per_query == 0 || self.copies_per_query > 255 {
            return bad("copies_per_query must be in 1..=255".into());
        }
        Ok(())
    }
}
