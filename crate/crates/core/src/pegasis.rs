//! Chain-based data gathering baseline. Every sensor reaches the base
//! station directly; per round, data is passed along a greedy chain to a
//! leader that forwards one packet to the base station.

use crate::netsim::{
    build_topology, lifetime_failures, run_case4_lifetime, LifetimeResult, RadioModel, RangeLevel, SimConfig,
    SimError, Topology, LIFETIME_ROUND_CAP,
};
use crate::protocol::NodeId;

/// Base station position of the lifetime scenario.
pub const BS_POSITION: (f64, f64) = (25.0, 150.0);

/// Sensor order along the chain. The leader of round `r` (1-based) is
/// `order[(r - 1) % order.len()]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub order: Vec<NodeId>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn leader_index(&self, round: u64) -> usize {
        ((round.max(1) - 1) % self.order.len() as u64) as usize
    }

    /// Removes a dead node, joining its two chain neighbors.
    pub fn splice_out(&mut self, node: NodeId) {
        self.order.retain(|&n| n != node);
    }

    /// Summed link length along the chain.
    pub fn length(&self, topology: &Topology) -> f64 {
        self.order.windows(2).map(|w| topology.distance(w[0], w[1])).sum()
    }
}

/// Greedy chain over `nodes`: starts at the one farthest from `bs` and
/// repeatedly appends the nearest node not yet chained. Ties go to the
/// lower id.
pub fn build_chain(topology: &Topology, nodes: &[NodeId], bs: (f64, f64)) -> Chain {
    let d_bs = |n: NodeId| crate::netsim::distance(topology.position(n), bs);
    let mut rest: Vec<NodeId> = nodes.to_vec();
    rest.sort();
    let mut order = Vec::with_capacity(rest.len());
    let Some(start) = rest.iter().copied().max_by(|&a, &b| d_bs(a).total_cmp(&d_bs(b)).then(b.cmp(&a))) else {
        return Chain { order };
    };
    rest.retain(|&n| n != start);
    order.push(start);
    while !rest.is_empty() {
        let last = *order.last().expect("chain started");
        let (pos, _) = rest
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| topology.distance(last, a).total_cmp(&topology.distance(last, b)).then(a.cmp(&b)))
            .expect("non-empty");
        order.push(rest.remove(pos));
    }
    Chain { order }
}

/// Energy spent by each chain member in one round, in chain order, plus
/// the total. The leader pays one link receive per chain neighbor and a
/// transmission to the base station.
pub fn round_energy(topology: &Topology, chain: &Chain, leader: usize, bs: (f64, f64), radio: &RadioModel, bits: u32) -> (Vec<f64>, f64) {
    let k = chain.len();
    let mut cost = vec![0.0; k];
    for i in 0..k {
        if i == leader {
            continue;
        }
        let next = if i < leader { i + 1 } else { i - 1 };
        cost[i] += radio.tx(bits, topology.distance(chain.order[i], chain.order[next]));
        cost[next] += radio.rx(bits);
    }
    if k > 0 {
        let d = crate::netsim::distance(topology.position(chain.order[leader]), bs);
        cost[leader] += radio.tx(bits, d);
    }
    let total = cost.iter().sum();
    (cost, total)
}

/// Chain gathering on the same placement, energy model and failure set as
/// [`run_case4_lifetime`] for `config`. Node 0 of the placement is the base
/// station; the rest are sensors.
pub fn run_pegasis_lifetime(config: &SimConfig, failure_fraction: f64) -> Result<LifetimeResult, SimError> {
    let topology = build_topology(config)?;
    Ok(pegasis_on(config, &topology, failure_fraction))
}

pub fn pegasis_on(config: &SimConfig, topology: &Topology, failure_fraction: f64) -> LifetimeResult {
    let bs = topology.position(topology.sink());
    let radio = RadioModel::from_config(config);
    let sensors = config.n - 1;
    let limit = sensors.div_ceil(2);
    let mut energy = vec![config.e_init; config.n];
    let mut alive = vec![true; config.n];
    alive[0] = false;
    for id in lifetime_failures(config, failure_fraction) {
        alive[id.index()] = false;
    }
    let living: Vec<NodeId> = (1..config.n).map(|i| NodeId(i as u32)).filter(|n| alive[n.index()]).collect();
    let mut chain = build_chain(topology, &living, bs);
    let dead = |alive: &[bool]| sensors - alive[1..].iter().filter(|&&a| a).count();

    let mut rounds = 0;
    let mut packets = 0;
    while rounds < LIFETIME_ROUND_CAP && dead(&alive) < limit && !chain.is_empty() {
        rounds += 1;
        let leader = chain.leader_index(rounds);
        let (cost, _) = round_energy(topology, &chain, leader, bs, &radio, config.packet_bits);
        let mut leader_paid = true;
        for (i, &c) in cost.iter().enumerate() {
            let id = chain.order[i].index();
            if energy[id] >= c {
                energy[id] -= c;
            } else {
                energy[id] = 0.0;
                if i == leader {
                    leader_paid = false;
                }
            }
            if energy[id] <= 0.0 {
                alive[id] = false;
            }
        }
        if leader_paid {
            packets += 1;
        }
        for id in chain.order.clone() {
            if !alive[id.index()] {
                chain.splice_out(id);
            }
        }
    }
    LifetimeResult { rounds, packets_at_sink: packets }
}

/// Scenario of the lifetime comparison for a given seed: 100 sensors on a
/// 50 m square, the base station outside it, and a 110 m high power range
/// that lets every sensor reach the base station.
pub fn lifetime_scenario(seed: u64) -> SimConfig {
    SimConfig {
        n: 101,
        side: 50.0,
        long_range: 110.0,
        seed,
        sink_position: Some(BS_POSITION),
        connectivity: RangeLevel::Long,
        ..SimConfig::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub failure_fraction: f64,
    pub case4: LifetimeResult,
    pub pegasis: LifetimeResult,
}

pub fn compare_case4(config: &SimConfig, failure_fractions: &[f64]) -> Result<Vec<ComparisonRow>, SimError> {
    let topology = build_topology(config)?;
    failure_fractions
        .iter()
        .map(|&f| {
            Ok(ComparisonRow {
                failure_fraction: f,
                case4: run_case4_lifetime(config, f)?,
                pegasis: pegasis_on(config, &topology, f),
            })
        })
        .collect()
}
