//! Forwarding information tables, query-flood update rules and packet
//! headers.
//!
//! Everything in here is a pure function of its inputs: there is no clock,
//! no radio and no randomness. The simulator in [`crate::netsim`] drives
//! these transitions as DATA_REQ broadcasts arrive.

use std::collections::BTreeMap;
use std::fmt;

use arrayvec::ArrayVec;
use thiserror::Error;

/// Number of least-hop neighbors advertised in a DATA_REQ header.
pub const FORWARDER_SLOTS: usize = 3;

/// Unique, stable identifier of a sensor node within a topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Hop distance to the sink. [`Hops::INF`] stands for "not yet known".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hops(pub u16);

/// Sentinel hop count: larger than any hop reachable in a topology of
/// fewer than 65535 nodes.
pub const HOP_INF: Hops = Hops(u16::MAX);

impl Hops {
    pub const INF: Hops = HOP_INF;
    pub const ZERO: Hops = Hops(0);

    pub fn is_finite(self) -> bool {
        self != HOP_INF
    }

    /// One hop farther; saturates at [`HOP_INF`].
    pub fn succ(self) -> Hops {
        if self.is_finite() {
            Hops(self.0.saturating_add(1).min(u16::MAX - 1))
        } else {
            HOP_INF
        }
    }
}

impl fmt::Display for Hops {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str("inf")
        }
    }
}

/// The four service classes carried in the ToS bits of a DATA_REQ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QosClass {
    Normal,
    Reliable,
    Delay,
    DelayReliable,
}

impl QosClass {
    pub const ALL: [QosClass; 4] = [
        QosClass::Normal,
        QosClass::Reliable,
        QosClass::Delay,
        QosClass::DelayReliable,
    ];

    /// 2-bit type-of-service code.
    pub fn tos(self) -> ToS {
        ToS(match self {
            QosClass::Normal => 0b00,
            QosClass::Reliable => 0b01,
            QosClass::Delay => 0b10,
            QosClass::DelayReliable => 0b11,
        })
    }

    pub fn from_tos(tos: ToS) -> QosClass {
        match tos.0 & 0b11 {
            0b00 => QosClass::Normal,
            0b01 => QosClass::Reliable,
            0b10 => QosClass::Delay,
            _ => QosClass::DelayReliable,
        }
    }

    /// Classes that dispatch copies over several first hops and use
    /// link-layer acknowledgments.
    pub fn is_reliable(self) -> bool {
        matches!(self, QosClass::Reliable | QosClass::DelayReliable)
    }

    /// Classes that transmit at the long-range power level.
    pub fn is_delay_sensitive(self) -> bool {
        matches!(self, QosClass::Delay | QosClass::DelayReliable)
    }

    pub fn name(self) -> &'static str {
        match self {
            QosClass::Normal => "normal",
            QosClass::Reliable => "reliable",
            QosClass::Delay => "delay",
            QosClass::DelayReliable => "delay_reliable",
        }
    }

    pub fn parse(s: &str) -> Option<QosClass> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "normal" | "case1" => Some(QosClass::Normal),
            "reliable" | "case2" => Some(QosClass::Reliable),
            "delay" | "case3" => Some(QosClass::Delay),
            "delay_reliable" | "delayreliable" | "case4" => Some(QosClass::DelayReliable),
            _ => None,
        }
    }
}

impl fmt::Display for QosClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Two-bit type-of-service field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ToS(u8);

impl ToS {
    /// Only the low two bits are kept.
    pub fn from_bits(bits: u8) -> ToS {
        ToS(bits & 0b11)
    }

    pub fn bits(self) -> u8 {
        self.0
    }
}

impl fmt::Display for ToS {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02b}", self.0)
    }
}

pub type Forwarders = ArrayVec<NodeId, FORWARDER_SLOTS>;

/// Query flood packet metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DataReqHeader {
    pub query_id: u32,
    pub tos: ToS,
    pub sender_id: NodeId,
    pub sender_energy: f64,
    pub sender_hop: Hops,
    pub forwarders: Forwarders,
}

/// The fields a node fills in from its own FIT when it rebroadcasts.
#[derive(Debug, Clone, PartialEq)]
pub struct Advert {
    pub sender_energy: f64,
    pub sender_hop: Hops,
    pub forwarders: Forwarders,
}

impl DataReqHeader {
    pub fn from_advert(query_id: u32, tos: ToS, sender_id: NodeId, advert: Advert) -> Self {
        DataReqHeader {
            query_id,
            tos,
            sender_id,
            sender_energy: advert.sender_energy,
            sender_hop: advert.sender_hop,
            forwarders: advert.forwarders,
        }
    }
}

/// Which of the source's dispatched paths a reply copy rides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathId {
    Primary,
    Alternate1,
    Alternate2,
}

impl PathId {
    pub fn from_index(i: usize) -> PathId {
        match i {
            0 => PathId::Primary,
            1 => PathId::Alternate1,
            _ => PathId::Alternate2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PathId::Primary => "primary",
            PathId::Alternate1 => "alt1",
            PathId::Alternate2 => "alt2",
        }
    }
}

/// Reply packet metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DataRepHeader {
    pub src: NodeId,
    pub dst: NodeId,
    pub query_id: u32,
    pub copy_index: u8,
    pub path_id: PathId,
    pub prev_hop: NodeId,
    pub ttl: u32,
}

/// What a node knows about one neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct FitEntry {
    pub neighbor: NodeId,
    pub energy: f64,
    pub hop: Hops,
    pub forwarders: Forwarders,
    pub queue_len: u32,
}

/// Outcome of processing one DATA_REQ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloodAction {
    UpdatedAndRebroadcast,
    RecordedAndRebroadcast,
    Dropped,
}

impl FloodAction {
    pub fn wants_rebroadcast(self) -> bool {
        !matches!(self, FloodAction::Dropped)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("DATA_REQ from node {0} addressed back to itself")]
    SelfAddressed(NodeId),
    #[error("malformed DATA_REQ from node {sender}: {reason}")]
    MalformedHeader { sender: NodeId, reason: &'static str },
    #[error("node {0} cannot advertise before it has learned a hop count")]
    HopUnknown(NodeId),
}

/// Forwarding information table: one record per neighbor plus the node's
/// own hop count, energy and queue length.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub self_id: NodeId,
    pub self_hop: Hops,
    pub self_energy: f64,
    pub self_queue_len: u32,
    entries: BTreeMap<NodeId, FitEntry>,
}

impl Fit {
    /// Table at network bootstrap: no neighbors known, hop count zero for the
    /// sink and unknown for everybody else.
    pub fn bootstrap(self_id: NodeId, is_sink: bool) -> Fit {
        Fit {
            self_id,
            self_hop: if is_sink { Hops::ZERO } else { HOP_INF },
            self_energy: 0.0,
            self_queue_len: 0,
            entries: BTreeMap::new(),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = &FitEntry> + '_ {
        self.entries.values()
    }

    pub fn entry(&self, neighbor: NodeId) -> Option<&FitEntry> {
        self.entries.get(&neighbor)
    }

    pub fn contains(&self, neighbor: NodeId) -> bool {
        self.entries.contains_key(&neighbor)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn neighbor_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.keys().copied()
    }

    /// Inserts or refreshes the record for `entry.neighbor`.
    pub fn upsert(&mut self, entry: FitEntry) {
        assert_ne!(entry.neighbor, self.self_id, "a node is not its own neighbor");
        self.entries.insert(entry.neighbor, entry);
    }

    /// Applies the three flood update rules for a DATA_REQ heard from a
    /// neighbor.
    ///
    /// A strictly better hop count is adopted as `L_k + 1`. An equal-cost
    /// sender is recorded. A sender that is not closer to the sink than this
    /// node is ignored and the packet dropped.
    pub fn apply_data_req(&mut self, hdr: &DataReqHeader) -> Result<FloodAction, ProtocolError> {
        validate_header(hdr)?;
        if hdr.sender_id == self.self_id {
            return Err(ProtocolError::SelfAddressed(hdr.sender_id));
        }
        let offered = hdr.sender_hop.succ();
        let action = match offered.cmp(&self.self_hop) {
            std::cmp::Ordering::Less => {
                self.self_hop = offered;
                FloodAction::UpdatedAndRebroadcast
            }
            std::cmp::Ordering::Equal => FloodAction::RecordedAndRebroadcast,
            std::cmp::Ordering::Greater => FloodAction::Dropped,
        };
        let queue_len = self.entries.get(&hdr.sender_id).map_or(0, |e| e.queue_len);
        self.upsert(FitEntry {
            neighbor: hdr.sender_id,
            energy: hdr.sender_energy,
            hop: hdr.sender_hop,
            forwarders: hdr.forwarders.clone(),
            queue_len,
        });
        Ok(action)
    }

    /// Header fields for a rebroadcast: own energy and hop count plus the
    /// three known neighbors closest to the sink (ties by ascending id).
    pub fn advert(&self) -> Result<Advert, ProtocolError> {
        if !self.self_hop.is_finite() {
            return Err(ProtocolError::HopUnknown(self.self_id));
        }
        let mut ranked: Vec<&FitEntry> = self.entries.values().collect();
        ranked.sort_by_key(|e| (e.hop, e.neighbor));
        Ok(Advert {
            sender_energy: self.self_energy,
            sender_hop: self.self_hop,
            forwarders: ranked.iter().take(FORWARDER_SLOTS).map(|e| e.neighbor).collect(),
        })
    }

    /// Drops every neighbor whose advertised energy is below `e_threshold`.
    pub fn prune_low_energy(&mut self, e_threshold: f64) {
        debug_assert!(e_threshold >= 0.0);
        self.entries.retain(|_, e| e.energy >= e_threshold);
    }

    /// Stores the latest known queue length of `neighbor`. Returns `false`
    /// (and leaves the table alone) if the neighbor is unknown.
    pub fn record_queue_len(&mut self, neighbor: NodeId, queue_len: u32) -> bool {
        match self.entries.get_mut(&neighbor) {
            Some(e) => {
                e.queue_len = queue_len;
                true
            }
            None => {
                log::warn!(
                    "node {}: queue length for unknown neighbor {neighbor} ignored",
                    self.self_id
                );
                false
            }
        }
    }

    /// Forgets a neighbor, typically after its acknowledgment timed out.
    /// Returns whether an entry was removed.
    pub fn remove(&mut self, neighbor: NodeId) -> bool {
        self.entries.remove(&neighbor).is_some()
    }
}

fn validate_header(hdr: &DataReqHeader) -> Result<(), ProtocolError> {
    let malformed = |reason| ProtocolError::MalformedHeader { sender: hdr.sender_id, reason };
    if !hdr.sender_hop.is_finite() {
        return Err(malformed("sender hop count unknown"));
    }
    if !(hdr.sender_energy.is_finite() && hdr.sender_energy >= 0.0) {
        return Err(malformed("sender energy not a non-negative number"));
    }
    if hdr.forwarders.contains(&hdr.sender_id) {
        return Err(malformed("sender listed among its own forwarders"));
    }
    for (i, f) in hdr.forwarders.iter().enumerate() {
        if hdr.forwarders[..i].contains(f) {
            return Err(malformed("duplicate forwarder"));
        }
    }
    Ok(())
}

/// Free-function form of [`Fit::bootstrap`].
pub fn fit_bootstrap(self_id: NodeId, is_sink: bool) -> Fit {
    Fit::bootstrap(self_id, is_sink)
}

/// Value-semantics form of [`Fit::apply_data_req`].
pub fn apply_data_req(fit: &Fit, hdr: &DataReqHeader) -> Result<(Fit, FloodAction), ProtocolError> {
    let mut next = fit.clone();
    let action = next.apply_data_req(hdr)?;
    Ok((next, action))
}

pub fn advert_from_fit(fit: &Fit) -> Result<Advert, ProtocolError> {
    fit.advert()
}

pub fn prune_low_energy(fit: &Fit, e_threshold: f64) -> Fit {
    let mut next = fit.clone();
    next.prune_low_energy(e_threshold);
    next
}

pub fn record_queue_len(fit: &Fit, neighbor: NodeId, queue_len: u32) -> (Fit, bool) {
    let mut next = fit.clone();
    let known = next.record_queue_len(neighbor, queue_len);
    (next, known)
}
