use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    Ttl,
    NoRoute,
    /// The next hop was dead and the class has no acknowledgment to notice.
    DeadNextHop,
    /// Older than the delay bound of the delay-sensitive reliable class.
    Deadline,
    /// The holding node ran out of energy.
    EnergyDepleted,
}

impl DropReason {
    pub fn name(self) -> &'static str {
        match self {
            DropReason::Ttl => "ttl",
            DropReason::NoRoute => "no_route",
            DropReason::DeadNextHop => "dead_next_hop",
            DropReason::Deadline => "deadline",
            DropReason::EnergyDepleted => "energy_depleted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CopyOutcome {
    InFlight,
    Delivered { latency: f64 },
    Dropped(DropReason),
}

/// Counters for one run (or, in lifetime mode, every round so far).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub total_energy_dissipated: f64,
    pub packets_received_at_sink: u64,
    pub latencies: Vec<f64>,
    pub replies_sent: u64,
    pub replies_delivered: u64,
    pub drops: BTreeMap<DropReason, u64>,
}

impl RunMetrics {
    pub fn dropped(&self) -> u64 {
        self.drops.values().sum()
    }

    /// Total dissipated energy per packet received at the sink; NaN when
    /// nothing arrived.
    pub fn avg_dissipated_energy(&self) -> f64 {
        if self.packets_received_at_sink == 0 {
            f64::NAN
        } else {
            self.total_energy_dissipated / self.packets_received_at_sink as f64
        }
    }

    /// Mean source-to-sink delay of delivered copies; NaN when none arrived.
    pub fn avg_latency(&self) -> f64 {
        if self.latencies.is_empty() {
            f64::NAN
        } else {
            self.latencies.iter().sum::<f64>() / self.latencies.len() as f64
        }
    }

    pub fn delivery_probability(&self) -> f64 {
        if self.replies_sent == 0 {
            0.0
        } else {
            self.replies_delivered as f64 / self.replies_sent as f64
        }
    }
}
