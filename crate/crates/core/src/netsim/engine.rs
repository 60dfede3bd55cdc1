use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::protocol::{DataRepHeader, DataReqHeader, Fit, FloodAction, Hops, NodeId, PathId, QosClass};
use crate::routing::{self, Pct, Rationale, RouteDecision, RouteError};

use super::metrics::{CopyOutcome, DropReason, RunMetrics};
use super::trace::TraceLine;
use super::{RadioModel, RangeLevel, SimConfig, Topology};

/// Simulation clock in integer nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub fn from_secs(s: f64) -> SimTime {
        assert!(s >= 0.0 && s.is_finite(), "negative or non-finite duration {s}");
        SimTime((s * 1e9).round() as u64)
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 * 1e-9
    }
}

impl std::ops::Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl std::ops::Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

/// A reply copy as it sits in queues and travels over links.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub hdr: DataRepHeader,
    /// Index into [`Network::copies`].
    pub copy: usize,
    pub created: SimTime,
    /// First hop assigned by a multipath source; used once if still known.
    pub pinned: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimEvent {
    QueryStart { query_id: u32 },
    BroadcastArrive { from: NodeId, to: NodeId, hdr: DataReqHeader },
    UnicastArrive { from: NodeId, to: NodeId, packet: Packet },
    AckArrive { from: NodeId, to: NodeId, token: u64 },
    AckTimeout { sender: NodeId, receiver: NodeId, token: u64 },
    QueueService { node: NodeId },
}

impl SimEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            SimEvent::QueryStart { .. } => "QueryStart",
            SimEvent::BroadcastArrive { .. } => "BroadcastArrive",
            SimEvent::UnicastArrive { .. } => "UnicastArrive",
            SimEvent::AckArrive { .. } => "AckArrive",
            SimEvent::AckTimeout { .. } => "AckTimeout",
            SimEvent::QueueService { .. } => "QueueService",
        }
    }
}

struct Scheduled {
    time: SimTime,
    seq: u64,
    event: SimEvent,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Awaiting {
    receiver: NodeId,
    token: u64,
    sent_at: SimTime,
    from_queue: bool,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub alive: bool,
    pub energy: f64,
    pub fit: Fit,
    pub pct: Pct,
    pub queue: VecDeque<Packet>,
    pub tx_count: u64,
    pub rx_count: u64,
    busy: bool,
    awaiting: Option<Awaiting>,
    last_broadcast: Option<u32>,
    /// Acknowledged classes: per copy, the node it first came from and the
    /// neighbors it has been handed to since.
    repair: BTreeMap<usize, Repair>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Repair {
    parent: Option<NodeId>,
    handed: Vec<NodeId>,
}

/// Number of nodes failed at `fraction` in an `n`-node network (sink
/// included in `n`).
pub fn failure_count(n: usize, fraction: f64) -> usize {
    assert!((0.0..1.0).contains(&fraction), "failure fraction out of range");
    (fraction * (n - 1) as f64 + 1e-9).floor() as usize
}

/// Seeded uniform choice of `count` nodes out of `candidates`, returned in
/// ascending order. Prefixes of one shuffle, so larger counts contain the
/// smaller sets.
pub fn failure_set(mut candidates: Vec<NodeId>, count: usize, seed: u64) -> Vec<NodeId> {
    candidates.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);
    candidates.truncate(count);
    candidates.sort();
    candidates
}

/// Estimated waiting time at a node: buffered packets times the per-packet
/// service time.
pub fn waiting_time(node: &NodeState, config: &SimConfig) -> f64 {
    node.queue.len() as f64 * config.service_time
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChargeKind {
    BroadcastTx,
    BroadcastRx,
    DataTx,
    DataRx,
    AckTx,
    AckRx,
}

/// One energy debit, kept when auditing is enabled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Charge {
    pub time_s: f64,
    pub node: NodeId,
    pub kind: ChargeKind,
    pub joules: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloodReport {
    pub query_id: u32,
    pub broadcasts: usize,
    pub energy: f64,
    pub finished_at_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkOutcome {
    Delivered { delay: f64 },
    Timeout { after: f64 },
}

/// Life of one reply copy.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyRecord {
    pub source: NodeId,
    pub query_id: u32,
    pub copy_index: u8,
    pub path_id: PathId,
    pub source_hop: Hops,
    /// Nodes that held the copy, starting with the source.
    pub hops: Vec<NodeId>,
    /// Neighbors that failed to acknowledge this copy.
    pub timeouts: Vec<NodeId>,
    /// Whether any forwarding decision fell back past the regular rule.
    pub fallback: bool,
    pub outcome: CopyOutcome,
}

/// The simulated network: node states, the event queue and run counters.
pub struct Network {
    config: SimConfig,
    topology: Topology,
    radio: RadioModel,
    nodes: Vec<NodeState>,
    events: BinaryHeap<Reverse<Scheduled>>,
    now: SimTime,
    seq: u64,
    next_token: u64,
    qos: QosClass,
    query_id: u32,
    broadcasts: usize,
    metrics: RunMetrics,
    copies: Vec<CopyRecord>,
    trace: Option<Vec<TraceLine>>,
    charges: Option<Vec<Charge>>,
}

impl Network {
    pub fn new(config: SimConfig, topology: Topology) -> Network {
        assert_eq!(config.n, topology.len(), "topology size does not match config");
        let sink = topology.sink();
        let nodes = (0..topology.len())
            .map(|i| {
                let id = NodeId(i as u32);
                NodeState {
                    id,
                    alive: true,
                    energy: config.e_init,
                    fit: Fit::bootstrap(id, id == sink),
                    pct: Pct::default(),
                    queue: VecDeque::new(),
                    tx_count: 0,
                    rx_count: 0,
                    busy: false,
                    awaiting: None,
                    last_broadcast: None,
                    repair: BTreeMap::new(),
                }
            })
            .collect();
        Network {
            radio: RadioModel::from_config(&config),
            config,
            topology,
            nodes,
            events: BinaryHeap::new(),
            now: SimTime::default(),
            seq: 0,
            next_token: 0,
            qos: QosClass::Normal,
            query_id: 0,
            broadcasts: 0,
            metrics: RunMetrics::default(),
            copies: Vec::new(),
            trace: None,
            charges: None,
        }
    }

    /// Keeps a line per processed event (see [`TraceLine`]).
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    /// Keeps every energy debit.
    pub fn enable_audit(&mut self) {
        self.charges.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[TraceLine] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn charges(&self) -> &[Charge] {
        self.charges.as_deref().unwrap_or(&[])
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeState {
        &self.nodes[id.index()]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut NodeState {
        &mut self.nodes[id.index()]
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    pub fn copies(&self) -> &[CopyRecord] {
        &self.copies
    }

    pub fn now_s(&self) -> f64 {
        self.now.as_secs()
    }

    pub fn sink(&self) -> NodeId {
        self.topology.sink()
    }

    pub fn qos(&self) -> QosClass {
        self.qos
    }

    pub fn pending_events(&self) -> usize {
        self.events.len()
    }

    /// Sensors (every node but the sink) that are no longer alive.
    pub fn dead_sensors(&self) -> usize {
        self.nodes.iter().filter(|n| n.id != self.sink() && !n.alive).count()
    }

    /// Sum of remaining battery energy over the sensors.
    pub fn residual_energy(&self) -> f64 {
        self.nodes.iter().filter(|n| n.id != self.sink()).map(|n| n.energy).sum()
    }

    fn level(&self) -> RangeLevel {
        RangeLevel::for_qos(self.qos)
    }

    fn range(&self) -> f64 {
        self.topology.range(self.level())
    }

    fn service(&self) -> SimTime {
        SimTime::from_secs(self.config.service_time)
    }

    fn ack_time(&self) -> SimTime {
        SimTime::from_secs(self.config.ack_time())
    }

    fn alive(&self, id: NodeId) -> bool {
        self.nodes[id.index()].alive
    }

    pub fn schedule(&mut self, at: SimTime, event: SimEvent) {
        assert!(at >= self.now, "event scheduled in the past");
        self.seq += 1;
        self.events.push(Reverse(Scheduled { time: at, seq: self.seq, event }));
    }

    /// Processes events in (time, insertion) order until none are left.
    pub fn run(&mut self) {
        while let Some(Reverse(next)) = self.events.pop() {
            debug_assert!(next.time >= self.now);
            self.now = next.time;
            self.dispatch(next.event);
        }
    }

    fn dispatch(&mut self, event: SimEvent) {
        match event {
            SimEvent::QueryStart { query_id } => self.on_query_start(query_id),
            SimEvent::BroadcastArrive { from, to, hdr } => self.on_broadcast_arrive(from, to, hdr),
            SimEvent::UnicastArrive { from, to, packet } => self.on_unicast_arrive(from, to, packet),
            SimEvent::AckArrive { from, to, token } => self.on_ack_arrive(from, to, token),
            SimEvent::AckTimeout { sender, receiver, token } => self.on_ack_timeout(sender, receiver, token),
            SimEvent::QueueService { node } => self.on_queue_service(node),
        }
    }

    fn log(&mut self, kind: &str, src: Option<NodeId>, dst: Option<NodeId>, detail: impl FnOnce() -> Vec<(&'static str, String)>) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceLine {
                time_s: self.now.as_secs(),
                kind: kind.to_string(),
                src: src.map(|n| n.0),
                dst: dst.map(|n| n.0),
                query_id: Some(self.query_id),
                detail: detail().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            });
        }
    }

    /// Debits `joules` from a battery node. A node that cannot pay in full
    /// spends what it has, dies, and the action does not happen.
    fn debit(&mut self, id: NodeId, joules: f64, kind: ChargeKind) -> bool {
        if id == self.sink() {
            return true;
        }
        let node = &mut self.nodes[id.index()];
        if !node.alive {
            return false;
        }
        let paid = joules.min(node.energy);
        node.energy -= paid;
        self.metrics.total_energy_dissipated += paid;
        if let Some(charges) = self.charges.as_mut() {
            charges.push(Charge { time_s: self.now.as_secs(), node: id, kind, joules: paid });
        }
        let ok = paid >= joules;
        if !ok || self.nodes[id.index()].energy <= 0.0 {
            self.nodes[id.index()].energy = 0.0;
            self.kill(id, "energy");
        }
        ok
    }

    /// Marks a node dead from outside the event flow.
    pub fn kill_node(&mut self, id: NodeId) {
        self.kill(id, "injected");
    }

    fn kill(&mut self, id: NodeId, reason: &'static str) {
        if id == self.sink() || !self.alive(id) {
            return;
        }
        let node = &mut self.nodes[id.index()];
        node.alive = false;
        node.busy = false;
        node.awaiting = None;
        let lost: Vec<Packet> = node.queue.drain(..).collect();
        for p in lost {
            self.finish(p.copy, CopyOutcome::Dropped(DropReason::EnergyDepleted));
        }
        self.log("Failure", Some(id), None, || vec![("reason", reason.to_string())]);
    }

    fn finish(&mut self, copy: usize, outcome: CopyOutcome) {
        let record = &mut self.copies[copy];
        debug_assert_eq!(record.outcome, CopyOutcome::InFlight, "copy finished twice");
        record.outcome = outcome;
        match outcome {
            CopyOutcome::Delivered { latency } => {
                self.metrics.packets_received_at_sink += 1;
                self.metrics.replies_delivered += 1;
                self.metrics.latencies.push(latency);
            }
            CopyOutcome::Dropped(reason) => *self.metrics.drops.entry(reason).or_insert(0) += 1,
            CopyOutcome::InFlight => {}
        }
    }

    // ---- query flood ------------------------------------------------------

    /// Floods a DATA_REQ from the sink at the class's power level and runs
    /// until the network is quiet.
    pub fn run_flood(&mut self, query_id: u32, qos: QosClass) -> FloodReport {
        self.qos = qos;
        self.query_id = query_id;
        let sink = self.sink();
        for node in self.nodes.iter_mut().filter(|n| n.alive) {
            node.fit = Fit::bootstrap(node.id, node.id == sink);
            node.pct.clear();
            node.last_broadcast = None;
            node.repair.clear();
        }
        let energy_before = self.metrics.total_energy_dissipated;
        let broadcasts_before = self.broadcasts;
        self.schedule(self.now, SimEvent::QueryStart { query_id });
        self.run();
        FloodReport {
            query_id,
            broadcasts: self.broadcasts - broadcasts_before,
            energy: self.metrics.total_energy_dissipated - energy_before,
            finished_at_s: self.now.as_secs(),
        }
    }

    fn on_query_start(&mut self, query_id: u32) {
        let tos = self.qos.tos();
        self.log("QueryStart", Some(self.sink()), None, || vec![("tos", tos.to_string())]);
        let sink = self.sink();
        self.nodes[sink.index()].fit.self_energy = self.config.e_init;
        self.rebroadcast(sink, query_id);
    }

    fn rebroadcast(&mut self, id: NodeId, query_id: u32) {
        let node = &mut self.nodes[id.index()];
        if id != self.topology.sink() {
            node.fit.self_energy = node.energy;
        }
        let advert = match node.fit.advert() {
            Ok(a) => a,
            Err(e) => {
                log::warn!("{e}");
                return;
            }
        };
        let hdr = DataReqHeader::from_advert(query_id, self.qos.tos(), id, advert);
        let cost = self.radio.tx(self.config.packet_bits, self.range());
        if !self.debit(id, cost, ChargeKind::BroadcastTx) {
            return;
        }
        let node = &mut self.nodes[id.index()];
        node.last_broadcast = Some(query_id);
        node.tx_count += 1;
        self.broadcasts += 1;
        let at = self.now + self.service();
        let neighbors = self.topology.neighbors(id, self.level()).to_vec();
        for to in neighbors {
            if self.alive(to) {
                self.schedule(at, SimEvent::BroadcastArrive { from: id, to, hdr: hdr.clone() });
            }
        }
    }

    fn on_broadcast_arrive(&mut self, from: NodeId, to: NodeId, hdr: DataReqHeader) {
        if !self.alive(to) || hdr.query_id != self.query_id {
            return;
        }
        let cost = self.radio.rx(self.config.packet_bits);
        if !self.debit(to, cost, ChargeKind::BroadcastRx) {
            return;
        }
        let node = &mut self.nodes[to.index()];
        node.rx_count += 1;
        let action = match node.fit.apply_data_req(&hdr) {
            Ok(a) => a,
            Err(e) => {
                log::warn!("node {to}: {e}");
                return;
            }
        };
        let rebroadcast = match action {
            FloodAction::UpdatedAndRebroadcast => true,
            FloodAction::RecordedAndRebroadcast => node.last_broadcast != Some(hdr.query_id),
            FloodAction::Dropped => false,
        };
        let hop = node.fit.self_hop;
        self.log("BroadcastArrive", Some(from), Some(to), || {
            vec![("hop", hop.to_string()), ("action", format!("{action:?}")), ("rebroadcast", rebroadcast.to_string())]
        });
        if rebroadcast {
            self.rebroadcast(to, hdr.query_id);
        }
    }

    // ---- failures ---------------------------------------------------------

    /// Kills `floor(fraction * (n - 1))` nodes drawn uniformly (seeded) from
    /// the alive nodes outside `exempt` and the sink. With a fixed seed the
    /// failure sets of increasing fractions are nested.
    pub fn inject_failures(&mut self, fraction: f64, seed: u64, exempt: &[NodeId]) -> Vec<NodeId> {
        let sink = self.sink();
        let candidates: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| n.alive && n.id != sink && !exempt.contains(&n.id))
            .map(|n| n.id)
            .collect();
        let failed = failure_set(candidates, failure_count(self.config.n, fraction), seed);
        for &id in &failed {
            self.kill(id, "injected");
        }
        failed
    }

    // ---- replies ----------------------------------------------------------

    /// Registers a new reply copy originating at `src`.
    pub fn make_reply(&mut self, src: NodeId, copy_index: u8, path_id: PathId, pinned: Option<NodeId>) -> Packet {
        let copy = self.copies.len();
        self.copies.push(CopyRecord {
            source: src,
            query_id: self.query_id,
            copy_index,
            path_id,
            source_hop: self.nodes[src.index()].fit.self_hop,
            hops: vec![src],
            timeouts: Vec::new(),
            fallback: false,
            outcome: CopyOutcome::InFlight,
        });
        self.metrics.replies_sent += 1;
        Packet {
            hdr: DataRepHeader {
                src,
                dst: self.sink(),
                query_id: self.query_id,
                copy_index,
                path_id,
                prev_hop: src,
                ttl: self.config.effective_ttl(),
            },
            copy,
            created: self.now,
            pinned,
        }
    }

    /// Every source emits `copies_per_query` replies routed under `qos`;
    /// runs until all copies are delivered or dropped. Returns the records
    /// of the copies created by this call.
    pub fn deliver_replies(&mut self, qos: QosClass, sources: &[NodeId], query_id: u32) -> &[CopyRecord] {
        self.qos = qos;
        self.query_id = query_id;
        let first = self.copies.len();
        for &src in sources {
            let first_hops = if self.alive(src) { self.source_paths(src) } else { Vec::new() };
            for j in 0..self.config.copies_per_query {
                let path = if first_hops.is_empty() { 0 } else { j % first_hops.len() };
                let packet = self.make_reply(src, j as u8, PathId::from_index(path), first_hops.get(path).copied());
                if self.alive(src) {
                    self.enqueue(src, packet);
                } else {
                    self.finish(packet.copy, CopyOutcome::Dropped(DropReason::EnergyDepleted));
                }
            }
        }
        self.run();
        &self.copies[first..]
    }

    fn source_paths(&mut self, src: NodeId) -> Vec<NodeId> {
        match self.qos {
            QosClass::Reliable => {
                let thr = self.config.e_threshold;
                let fit = &mut self.nodes[src.index()].fit;
                fit.prune_low_energy(thr);
                routing::paths_reliable(fit, thr).map(|p| p.first_hops()).unwrap_or_default()
            }
            QosClass::DelayReliable => {
                let thr = self.config.e_threshold;
                self.nodes[src.index()].fit.prune_low_energy(thr);
                self.refresh_queue_lens(src);
                routing::paths_delay_reliable(&self.nodes[src.index()].fit, &BTreeSet::new())
                    .map(|p| p.first_hops())
                    .unwrap_or_default()
            }
            QosClass::Normal | QosClass::Delay => Vec::new(),
        }
    }

    fn enqueue(&mut self, id: NodeId, packet: Packet) {
        let node = &mut self.nodes[id.index()];
        node.queue.push_back(packet);
        node.fit.self_queue_len = node.queue.len() as u32;
        if !node.busy {
            node.busy = true;
            self.schedule(self.now, SimEvent::QueueService { node: id });
        }
    }

    fn pop_head(&mut self, id: NodeId) -> Option<Packet> {
        let node = &mut self.nodes[id.index()];
        let p = node.queue.pop_front();
        node.fit.self_queue_len = node.queue.len() as u32;
        p
    }

    fn refresh_queue_lens(&mut self, id: NodeId) {
        let lens: Vec<(NodeId, u32)> = self.nodes[id.index()]
            .fit
            .neighbor_ids()
            .filter(|&n| self.alive(n))
            .map(|n| (n, self.nodes[n.index()].queue.len() as u32))
            .collect();
        let fit = &mut self.nodes[id.index()].fit;
        for (n, q) in lens {
            fit.record_queue_len(n, q);
        }
    }

    fn on_queue_service(&mut self, id: NodeId) {
        if !self.alive(id) || self.nodes[id.index()].awaiting.is_some() {
            return;
        }
        let Some(head) = self.nodes[id.index()].queue.front().cloned() else {
            self.nodes[id.index()].busy = false;
            return;
        };
        let expired = self.qos == QosClass::DelayReliable
            && (self.now - head.created).as_secs() > self.config.delay_bound;
        let verdict = if head.hdr.ttl == 0 {
            Err(DropReason::Ttl)
        } else if expired {
            Err(DropReason::Deadline)
        } else {
            self.select_next_hop(id, &head).map_err(|_| DropReason::NoRoute)
        };
        let hop = self.nodes[id.index()].fit.self_hop;
        match verdict {
            Err(reason) => {
                self.log("QueueService", Some(id), None, || {
                    vec![("copy", head.copy.to_string()), ("hop", hop.to_string()), ("drop", reason.name().to_string())]
                });
                self.pop_head(id);
                self.finish(head.copy, CopyOutcome::Dropped(reason));
                self.schedule(self.now, SimEvent::QueueService { node: id });
            }
            Ok(decision) => {
                if decision.rationale == Rationale::Fallback {
                    self.copies[head.copy].fallback = true;
                }
                self.log("QueueService", Some(id), Some(decision.next_hop), || {
                    vec![
                        ("copy", head.copy.to_string()),
                        ("origin", head.hdr.src.to_string()),
                        ("hop", hop.to_string()),
                        ("rationale", decision.rationale.name().to_string()),
                    ]
                });
                if self.qos.is_reliable() {
                    let node = &mut self.nodes[id.index()];
                    let head = node.queue.front_mut().expect("head present");
                    head.hdr.ttl -= 1;
                    head.pinned = None;
                    let packet = head.clone();
                    node.repair.entry(packet.copy).or_default().handed.push(decision.next_hop);
                    self.transmit_acked(id, decision.next_hop, packet, true);
                } else {
                    self.transmit_unacked(id, decision.next_hop);
                }
            }
        }
    }

    fn select_next_hop(&mut self, id: NodeId, packet: &Packet) -> Result<RouteDecision, RouteError> {
        let mut excluded = BTreeSet::new();
        if self.qos.is_reliable() {
            // never hand a copy to the same neighbor twice, nor back to where
            // it came from until every other way is exhausted
            let r = self.nodes[id.index()].repair.get(&packet.copy).cloned().unwrap_or_default();
            excluded.extend(r.handed);
            excluded.extend(r.parent);
        } else if packet.hdr.prev_hop != id {
            excluded.insert(packet.hdr.prev_hop);
        }
        let (src, dst) = (packet.hdr.src, packet.hdr.dst);
        match self.qos {
            QosClass::Normal => routing::next_hop_normal(&self.nodes[id.index()].fit, &excluded),
            QosClass::Delay => {
                self.refresh_queue_lens(id);
                routing::next_hop_delay(&self.nodes[id.index()].fit, &excluded)
            }
            QosClass::Reliable | QosClass::DelayReliable => {
                let thr = self.config.e_threshold;
                self.nodes[id.index()].fit.prune_low_energy(thr);
                if self.qos == QosClass::DelayReliable {
                    self.refresh_queue_lens(id);
                }
                let node = &mut self.nodes[id.index()];
                if let Some(first) = packet.pinned.filter(|p| node.fit.contains(*p)) {
                    node.pct.observe(first, src, dst);
                    let rationale = if packet.hdr.path_id == PathId::Primary {
                        Rationale::PrimaryReliable
                    } else {
                        Rationale::AlternateReliable
                    };
                    return Ok(RouteDecision { next_hop: first, rationale });
                }
                let select = if self.qos == QosClass::Reliable {
                    routing::next_hop_reliable
                } else {
                    routing::next_hop_delay_reliable_intermediate
                };
                if let Ok(d) = select(&node.fit, &mut node.pct, src, dst, &excluded) {
                    return Ok(d);
                }
                let fallback = |next_hop| Ok(RouteDecision { next_hop, rationale: Rationale::Fallback });
                // every candidate already carries this pair: share one of
                // them, upstream ones first
                let mut scratch = Pct::default();
                if let Ok(d) = select(&node.fit, &mut scratch, src, dst, &excluded) {
                    node.pct.observe(d.next_hop, src, dst);
                    return fallback(d.next_hop);
                }
                // dead end: hand the copy back
                let parent = node.repair.get(&packet.copy).and_then(|r| r.parent);
                if let Some(prev) = parent.filter(|p| node.fit.contains(*p)) {
                    return fallback(prev);
                }
                Err(RouteError::NoRoute)
            }
        }
    }

    fn overhear(&mut self, sender: NodeId, packet: &Packet) {
        if !self.qos.is_reliable() {
            return;
        }
        let neighbors = self.topology.neighbors(sender, self.level()).to_vec();
        for n in neighbors {
            if self.alive(n) {
                self.nodes[n.index()].pct.observe(sender, packet.hdr.src, packet.hdr.dst);
            }
        }
    }

    fn transmit_unacked(&mut self, id: NodeId, to: NodeId) {
        let mut packet = self.pop_head(id).expect("head present");
        packet.hdr.ttl -= 1;
        let cost = self.radio.tx(self.config.packet_bits, self.range());
        if !self.debit(id, cost, ChargeKind::DataTx) {
            self.finish(packet.copy, CopyOutcome::Dropped(DropReason::EnergyDepleted));
            return;
        }
        self.nodes[id.index()].tx_count += 1;
        let done = self.now + self.service();
        if self.alive(to) && self.topology.adjacent(id, to, self.level()) {
            self.schedule(done, SimEvent::UnicastArrive { from: id, to, packet });
        } else {
            self.finish(packet.copy, CopyOutcome::Dropped(DropReason::DeadNextHop));
        }
        self.schedule(done, SimEvent::QueueService { node: id });
    }

    /// Sends `packet` from `from` to `to` and waits for a link-layer
    /// acknowledgment. A live in-range receiver answers after one data plus
    /// one acknowledgment air time; otherwise the sender gives up after
    /// `ack_timeout`, forgets the receiver and retries.
    pub fn unicast_with_ack(&mut self, from: NodeId, to: NodeId, packet: Packet) -> LinkOutcome {
        assert!(self.alive(from), "sender must be alive");
        self.transmit_acked(from, to, packet, false)
    }

    fn transmit_acked(&mut self, from: NodeId, to: NodeId, packet: Packet, from_queue: bool) -> LinkOutcome {
        let timeout = LinkOutcome::Timeout { after: self.config.ack_timeout };
        let cost = self.radio.tx(self.config.packet_bits, self.range());
        if !self.debit(from, cost, ChargeKind::DataTx) {
            if !from_queue {
                self.finish(packet.copy, CopyOutcome::Dropped(DropReason::EnergyDepleted));
            }
            return timeout;
        }
        self.nodes[from.index()].tx_count += 1;
        self.overhear(from, &packet);
        self.next_token += 1;
        let token = self.next_token;
        self.nodes[from.index()].awaiting = Some(Awaiting { receiver: to, token, sent_at: self.now, from_queue });
        if self.alive(to) && self.topology.adjacent(from, to, self.level()) {
            let exchange = self.service() + self.ack_time();
            self.schedule(self.now + exchange, SimEvent::UnicastArrive { from, to, packet });
            LinkOutcome::Delivered { delay: exchange.as_secs() }
        } else {
            let at = self.now + SimTime::from_secs(self.config.ack_timeout);
            self.schedule(at, SimEvent::AckTimeout { sender: from, receiver: to, token });
            timeout
        }
    }

    fn on_unicast_arrive(&mut self, from: NodeId, to: NodeId, mut packet: Packet) {
        let acked = self.qos.is_reliable();
        let received = self.alive(to) && {
            let rx = self.radio.rx(self.config.packet_bits);
            self.debit(to, rx, ChargeKind::DataRx)
        };
        let received = received && (!acked || {
            let ack = self.radio.tx(self.config.ack_bits, self.range());
            self.debit(to, ack, ChargeKind::AckTx)
        });
        let detail = |outcome: &str| {
            let copy = packet.copy.to_string();
            let origin = packet.hdr.src.to_string();
            let outcome = outcome.to_string();
            move || vec![("copy", copy), ("origin", origin), ("outcome", outcome)]
        };
        if !received {
            self.log("UnicastArrive", Some(from), Some(to), detail("lost"));
            if acked {
                self.reschedule_timeout(from);
            } else {
                self.finish(packet.copy, CopyOutcome::Dropped(DropReason::DeadNextHop));
            }
            return;
        }
        self.nodes[to.index()].rx_count += 1;
        if acked {
            if let Some(token) = self.nodes[from.index()].awaiting.map(|a| a.token) {
                self.schedule(self.now, SimEvent::AckArrive { from: to, to: from, token });
            }
        }
        self.copies[packet.copy].hops.push(to);
        if to == self.sink() {
            let latency = (self.now - packet.created).as_secs();
            let late = self.qos == QosClass::DelayReliable && latency > self.config.delay_bound;
            self.log("UnicastArrive", Some(from), Some(to), detail(if late { "late" } else { "delivered" }));
            let outcome = if late {
                CopyOutcome::Dropped(DropReason::Deadline)
            } else {
                CopyOutcome::Delivered { latency }
            };
            self.finish(packet.copy, outcome);
        } else {
            self.log("UnicastArrive", Some(from), Some(to), detail("queued"));
            packet.hdr.prev_hop = from;
            if self.qos.is_reliable() {
                self.nodes[to.index()].repair.entry(packet.copy).or_insert_with(|| Repair { parent: Some(from), handed: Vec::new() });
            }
            self.enqueue(to, packet);
        }
    }

    fn reschedule_timeout(&mut self, sender: NodeId) {
        if let Some(a) = self.nodes[sender.index()].awaiting {
            let at = (a.sent_at + SimTime::from_secs(self.config.ack_timeout)).max(self.now);
            self.schedule(at, SimEvent::AckTimeout { sender, receiver: a.receiver, token: a.token });
        }
    }

    fn on_ack_arrive(&mut self, from: NodeId, to: NodeId, token: u64) {
        let Some(wait) = self.nodes[to.index()].awaiting.filter(|a| a.token == token) else {
            return;
        };
        if !self.alive(to) {
            return;
        }
        let rx = self.radio.rx(self.config.ack_bits);
        if !self.debit(to, rx, ChargeKind::AckRx) {
            return;
        }
        self.log("AckArrive", Some(from), Some(to), Vec::new);
        self.nodes[to.index()].awaiting = None;
        if wait.from_queue {
            self.pop_head(to);
            self.schedule(self.now, SimEvent::QueueService { node: to });
        }
    }

    fn on_ack_timeout(&mut self, sender: NodeId, receiver: NodeId, token: u64) {
        let Some(wait) = self.nodes[sender.index()].awaiting.filter(|a| a.token == token) else {
            return;
        };
        if !self.alive(sender) {
            return;
        }
        let node = &mut self.nodes[sender.index()];
        node.awaiting = None;
        node.fit.remove(receiver);
        let copy = if wait.from_queue { node.queue.front().map(|p| p.copy) } else { None };
        if let Some(c) = copy {
            self.copies[c].timeouts.push(receiver);
        }
        self.log("AckTimeout", Some(sender), Some(receiver), || {
            copy.map(|c| vec![("copy", c.to_string())]).unwrap_or_default()
        });
        if wait.from_queue {
            self.schedule(self.now, SimEvent::QueueService { node: sender });
        }
    }
}
