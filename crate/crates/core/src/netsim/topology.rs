use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::protocol::{Hops, NodeId, HOP_INF};

use super::{derive_seed, salt, RangeLevel, SimConfig, SimError};

pub const MAX_TOPOLOGY_ATTEMPTS: usize = 100;

/// Static node placement with unit-disk adjacency at both power levels.
/// Node 0 is the sink.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    positions: Vec<(f64, f64)>,
    short_range: f64,
    long_range: f64,
    short_adj: Vec<Vec<NodeId>>,
    long_adj: Vec<Vec<NodeId>>,
}

impl Topology {
    pub fn from_positions(positions: Vec<(f64, f64)>, short_range: f64, long_range: f64) -> Topology {
        let short_adj = unit_disk(&positions, short_range);
        let long_adj = unit_disk(&positions, long_range);
        Topology { positions, short_range, long_range, short_adj, long_adj }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn sink(&self) -> NodeId {
        NodeId(0)
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn position(&self, node: NodeId) -> (f64, f64) {
        self.positions[node.index()]
    }

    pub fn range(&self, level: RangeLevel) -> f64 {
        match level {
            RangeLevel::Short => self.short_range,
            RangeLevel::Long => self.long_range,
        }
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        distance(self.position(a), self.position(b))
    }

    /// Neighbors in ascending id order.
    pub fn neighbors(&self, node: NodeId, level: RangeLevel) -> &[NodeId] {
        match level {
            RangeLevel::Short => &self.short_adj[node.index()],
            RangeLevel::Long => &self.long_adj[node.index()],
        }
    }

    pub fn adjacent(&self, a: NodeId, b: NodeId, level: RangeLevel) -> bool {
        self.neighbors(a, level).binary_search(&b).is_ok()
    }

    pub fn is_connected(&self, level: RangeLevel) -> bool {
        let hops = hops_over(self.len(), self.sink(), |u| self.neighbors(u, level).to_vec());
        hops.iter().all(|h| h.is_finite())
    }
}

pub fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn unit_disk(positions: &[(f64, f64)], range: f64) -> Vec<Vec<NodeId>> {
    let n = positions.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if distance(positions[i], positions[j]) <= range {
                adj[i].push(NodeId(j as u32));
                adj[j].push(NodeId(i as u32));
            }
        }
    }
    for list in &mut adj {
        list.sort();
    }
    adj
}

fn hops_over(n: usize, sink: NodeId, neighbors: impl Fn(NodeId) -> Vec<NodeId>) -> Vec<Hops> {
    let mut hops = vec![HOP_INF; n];
    let mut frontier = VecDeque::from([sink]);
    hops[sink.index()] = Hops::ZERO;
    while let Some(u) = frontier.pop_front() {
        for v in neighbors(u) {
            if !hops[v.index()].is_finite() {
                hops[v.index()] = hops[u.index()].succ();
                frontier.push_back(v);
            }
        }
    }
    hops
}

/// Uniform i.i.d. placement over `[0, side]^2`, redrawn with a fresh
/// sub-seed until the graph at `config.connectivity` is connected.
pub fn build_topology(config: &SimConfig) -> Result<Topology, SimError> {
    config.validate()?;
    for attempt in 0..MAX_TOPOLOGY_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[salt::TOPOLOGY, attempt as u64]));
        let mut positions: Vec<(f64, f64)> = (0..config.n)
            .map(|_| (rng.gen_range(0.0..=config.side), rng.gen_range(0.0..=config.side)))
            .collect();
        if let Some(sink) = config.sink_position {
            positions[0] = sink;
        }
        let topo = Topology::from_positions(positions, config.short_range, config.long_range);
        if topo.is_connected(config.connectivity) {
            return Ok(topo);
        }
    }
    Err(SimError::TopologyUnconnectable {
        attempts: MAX_TOPOLOGY_ATTEMPTS,
        n: config.n,
        side: config.side,
        range: config.range(config.connectivity),
    })
}

/// Breadth-first hop distance from `sink` under the unit-disk rule at
/// `range`, computed straight from positions. Unreachable nodes get
/// [`HOP_INF`].
pub fn bfs_hops(topology: &Topology, sink: NodeId, range: f64) -> Vec<Hops> {
    let pos = topology.positions();
    hops_over(pos.len(), sink, |u| {
        (0..pos.len())
            .filter(|&v| v != u.index() && distance(pos[u.index()], pos[v]) <= range)
            .map(|v| NodeId(v as u32))
            .collect()
    })
}
