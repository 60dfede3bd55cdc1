use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::protocol::{Hops, NodeId, QosClass};

use super::engine::{failure_count, failure_set, Charge, CopyRecord, FloodReport, Network};
use super::metrics::RunMetrics;
use super::trace::TraceLine;
use super::{build_topology, derive_seed, salt, SimConfig, SimError, Topology};

/// Everything observable about one query round.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub qos: QosClass,
    pub metrics: RunMetrics,
    pub copies: Vec<CopyRecord>,
    pub sources: Vec<NodeId>,
    pub failed: Vec<NodeId>,
    pub flood: FloodReport,
    /// Hop estimates right after the flood, indexed by node.
    pub self_hops: Vec<Hops>,
    pub final_energy: Vec<f64>,
    pub topology: Topology,
    /// Empty unless requested.
    pub trace: Vec<TraceLine>,
    /// Empty unless requested.
    pub charges: Vec<Charge>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoundOptions {
    pub trace: bool,
    pub audit: bool,
}

/// Seeded choice of `count` sources among `candidates`, ascending by id.
pub fn choose_sources(candidates: &[NodeId], count: usize, seed: u64) -> Vec<NodeId> {
    let mut pool = candidates.to_vec();
    pool.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<NodeId> = pool.choose_multiple(&mut rng, count.min(pool.len())).copied().collect();
    picked.sort();
    picked
}

/// One query: topology, flood at the class's power level, failures, then
/// replies from every source.
pub fn simulate_query_round(config: &SimConfig, qos: QosClass) -> Result<RunMetrics, SimError> {
    run_round(config, qos, RoundOptions::default()).map(|r| r.metrics)
}

pub fn run_round(config: &SimConfig, qos: QosClass, opts: RoundOptions) -> Result<RunReport, SimError> {
    let topology = build_topology(config)?;
    run_round_on(config, topology, qos, opts)
}

/// Like [`run_round`] on a given placement.
pub fn run_round_on(config: &SimConfig, topology: Topology, qos: QosClass, opts: RoundOptions) -> Result<RunReport, SimError> {
    config.validate()?;
    let mut net = Network::new(config.clone(), topology.clone());
    if opts.trace {
        net.enable_trace();
    }
    if opts.audit {
        net.enable_audit();
    }
    let query_id = 1;
    let flood = net.run_flood(query_id, qos);
    let self_hops: Vec<Hops> = net.nodes().iter().map(|n| n.fit.self_hop).collect();

    // sources are drawn from the whole sensor set so that every class sees
    // the same ones; the placement is connected at the short level
    let sensors: Vec<NodeId> = (1..config.n).map(|i| NodeId(i as u32)).collect();
    let sources = choose_sources(&sensors, config.sources, derive_seed(config.seed, &[salt::SOURCES]));
    let failed = net.inject_failures(config.failure_fraction, derive_seed(config.seed, &[salt::FAILURES]), &sources);
    net.deliver_replies(qos, &sources, query_id);

    Ok(RunReport {
        qos,
        metrics: net.metrics().clone(),
        copies: net.copies().to_vec(),
        sources,
        failed,
        flood,
        self_hops,
        final_energy: net.nodes().iter().map(|n| n.energy).collect(),
        trace: net.trace().to_vec(),
        charges: net.charges().to_vec(),
        topology,
    })
}

/// Outcome of a lifetime experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LifetimeResult {
    /// Rounds completed when half of the sensors were dead.
    pub rounds: u64,
    pub packets_at_sink: u64,
}

/// Safety stop for lifetime experiments.
pub const LIFETIME_ROUND_CAP: u64 = 1_000_000;

/// Sensors that die at `fraction` in a lifetime experiment. Both protocols
/// of a comparison draw from this one set.
pub fn lifetime_failures(config: &SimConfig, fraction: f64) -> Vec<NodeId> {
    let sensors = (1..config.n).map(|i| NodeId(i as u32)).collect();
    failure_set(sensors, failure_count(config.n, fraction), derive_seed(config.seed, &[salt::FAILURES]))
}

/// Repeated query rounds with energy carried over, until at least half of
/// the sensors are dead. Failures are injected once, after the first flood.
pub fn run_lifetime(config: &SimConfig, qos: QosClass, fraction: f64) -> Result<LifetimeResult, SimError> {
    config.validate()?;
    let topology = build_topology(config)?;
    let mut net = Network::new(config.clone(), topology);
    let sensors = config.n - 1;
    let limit = sensors.div_ceil(2);
    let failures = lifetime_failures(config, fraction);
    let mut round = 0;
    while round < LIFETIME_ROUND_CAP && net.dead_sensors() < limit {
        round += 1;
        let query_id = round as u32;
        net.run_flood(query_id, qos);
        if round == 1 {
            for &id in &failures {
                net.kill_node(id);
            }
        }
        let reachable: Vec<NodeId> = net
            .nodes()
            .iter()
            .filter(|n| n.alive && n.id != net.sink() && n.fit.self_hop.is_finite())
            .map(|n| n.id)
            .collect();
        if reachable.is_empty() {
            break;
        }
        let sources = choose_sources(&reachable, config.sources, derive_seed(config.seed, &[salt::SOURCES, round]));
        net.deliver_replies(qos, &sources, query_id);
    }
    Ok(LifetimeResult { rounds: round, packets_at_sink: net.metrics().packets_received_at_sink })
}

pub fn run_case4_lifetime(config: &SimConfig, fraction: f64) -> Result<LifetimeResult, SimError> {
    run_lifetime(config, QosClass::DelayReliable, fraction)
}
