//! Query-driven multi-class routing for wireless sensor networks: protocol
//! tables, forwarding rules, a deterministic event simulator, a chain-based
//! baseline and an experiment harness.

pub mod harness;
pub mod netsim;
pub mod pegasis;
pub mod protocol;
pub mod routing;

pub use netsim::{SimConfig, SimError};
pub use protocol::{Hops, NodeId, QosClass, HOP_INF};
