//! Deterministic discrete-event simulation of the query/reply protocol.
//!
//! A run is a pure function of its [`SimConfig`] and service class: topology,
//! sources, failed nodes and every event ordering are derived from the
//! configured seed.

mod config;
mod energy;
mod engine;
mod metrics;
mod round;
mod topology;
mod trace;

pub use self::config::{RangeLevel, SimConfig};
pub use self::energy::{rx_energy, tx_energy, RadioModel};
pub use self::engine::{
    failure_count, failure_set, waiting_time, Charge, ChargeKind, CopyRecord, FloodReport, LinkOutcome, Network, NodeState, Packet,
    SimEvent, SimTime,
};
pub use self::metrics::{CopyOutcome, DropReason, RunMetrics};
pub use self::round::{
    choose_sources, lifetime_failures, run_case4_lifetime, run_lifetime, run_round, run_round_on, simulate_query_round,
    LifetimeResult, RoundOptions, RunReport, LIFETIME_ROUND_CAP,
};
pub use self::topology::{bfs_hops, build_topology, distance, Topology, MAX_TOPOLOGY_ATTEMPTS};
pub use self::trace::{parse_trace_line, TraceLine};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("no connected topology found after {attempts} attempts (n={n}, side={side} m, range={range} m)")]
    TopologyUnconnectable { attempts: usize, n: usize, side: f64, range: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Seed salts for the independent random streams of a run.
pub(crate) mod salt {
    pub const TOPOLOGY: u64 = 0x746f_706f;
    pub const SOURCES: u64 = 0x7372_6373;
    pub const FAILURES: u64 = 0x6661_696c;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes a base seed with a list of salts into an independent sub-seed.
pub fn derive_seed(base: u64, salts: &[u64]) -> u64 {
    salts.iter().fold(splitmix64(base), |acc, &s| splitmix64(acc ^ splitmix64(s)))
}
