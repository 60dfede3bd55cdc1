//! Fixtures shared by the benchmarks.

use qwsn_core::netsim::{build_topology, Topology};
use qwsn_core::SimConfig;

/// Default parameters scaled to `n` nodes at the reference density.
pub fn config_for(n: usize, seed: u64) -> SimConfig {
    SimConfig { n, side: qwsn_core::harness::derive_side(n), seed, ..SimConfig::default() }
}

pub fn topology_for(n: usize, seed: u64) -> Topology {
    build_topology(&config_for(n, seed)).expect("reference density is connectable")
}
