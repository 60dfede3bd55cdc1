//! Next-hop and path selection for the four service classes, plus the path
//! construction table used to keep reliable paths apart.
//!
//! Every selector draws its candidates from the *upstream pool*: the live
//! (non-excluded) entries whose hop count is below the deciding node's own.
//! Only when no upstream neighbor is left does a selector look at lateral or
//! downstream entries, and such a pick is reported as [`Rationale::Fallback`].
//! Ties are always broken by ascending [`NodeId`].

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::protocol::{Fit, FitEntry, NodeId};

/// Default number of rows a node keeps in its path construction table.
pub const PCT_CAPACITY: usize = 64;

/// Number of least-hop neighbors considered by the multi-candidate rules.
const CANDIDATES: usize = 3;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum RouteError {
    #[error("no eligible next hop")]
    NoRoute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rationale {
    MinHopMaxEnergy,
    PrimaryReliable,
    AlternateReliable,
    MinWait,
    Fallback,
}

impl Rationale {
    pub fn name(self) -> &'static str {
        match self {
            Rationale::MinHopMaxEnergy => "min_hop_max_energy",
            Rationale::PrimaryReliable => "primary_reliable",
            Rationale::AlternateReliable => "alternate_reliable",
            Rationale::MinWait => "min_wait",
            Rationale::Fallback => "fallback",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteDecision {
    pub next_hop: NodeId,
    pub rationale: Rationale,
}

/// First hops chosen at a source for the multipath classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSet {
    pub primary: NodeId,
    pub alternates: Vec<NodeId>,
}

impl PathSet {
    /// Primary followed by the alternates.
    pub fn first_hops(&self) -> Vec<NodeId> {
        std::iter::once(self.primary).chain(self.alternates.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PctEntry {
    pub node_id: NodeId,
    pub src: NodeId,
    pub dst: NodeId,
}

/// Path construction table: which neighbors were seen (or chosen) carrying
/// traffic for which source/destination pair. Oldest rows are evicted first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pct {
    rows: VecDeque<PctEntry>,
    capacity: usize,
}

impl Default for Pct {
    fn default() -> Self {
        Pct::with_capacity(PCT_CAPACITY)
    }
}

impl Pct {
    pub fn with_capacity(capacity: usize) -> Pct {
        assert!(capacity > 0, "PCT capacity must be positive");
        Pct { rows: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn rows(&self) -> impl Iterator<Item = &PctEntry> + '_ {
        self.rows.iter()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn clear(&mut self) {
        self.rows.clear();
    }

    /// Records that `node_id` carries traffic from `src` to `dst`.
    pub fn observe(&mut self, node_id: NodeId, src: NodeId, dst: NodeId) {
        let row = PctEntry { node_id, src, dst };
        if self.rows.contains(&row) {
            return;
        }
        if self.rows.len() == self.capacity {
            self.rows.pop_front();
        }
        self.rows.push_back(row);
    }

    pub fn knows_node(&self, node: NodeId) -> bool {
        self.rows.iter().any(|r| r.node_id == node)
    }

    pub fn on_path(&self, node: NodeId, src: NodeId, dst: NodeId) -> bool {
        self.rows.contains(&PctEntry { node_id: node, src, dst })
    }
}

pub fn pct_observe(pct: &Pct, overheard_forwarder: NodeId, src: NodeId, dst: NodeId) -> Pct {
    let mut next = pct.clone();
    next.observe(overheard_forwarder, src, dst);
    next
}

/// Live entries, restricted to upstream ones when any exist. The flag is
/// `true` when the pool is upstream.
fn candidate_pool<'a>(fit: &'a Fit, excluded: &BTreeSet<NodeId>) -> (Vec<&'a FitEntry>, bool) {
    let live: Vec<&FitEntry> = fit.entries().filter(|e| !excluded.contains(&e.neighbor)).collect();
    let upstream: Vec<&FitEntry> = live.iter().copied().filter(|e| e.hop < fit.self_hop).collect();
    if upstream.is_empty() {
        (live, false)
    } else {
        (upstream, true)
    }
}

fn least_hop<'a>(pool: &[&'a FitEntry], k: usize) -> Vec<&'a FitEntry> {
    let mut ranked = pool.to_vec();
    ranked.sort_by_key(|e| (e.hop, e.neighbor));
    ranked.truncate(k);
    ranked
}

fn max_energy<'a>(candidates: &[&'a FitEntry]) -> Option<&'a FitEntry> {
    // the strict comparison keeps the first (lowest id) of equal energies
    candidates.iter().copied().fold(None, |best: Option<&FitEntry>, e| match best {
        Some(b) if e.energy > b.energy || (e.energy == b.energy && e.neighbor < b.neighbor) => Some(e),
        Some(b) => Some(b),
        None => Some(e),
    })
}

fn by_wait_then_id(candidates: &mut [&FitEntry]) {
    candidates.sort_by_key(|e| (e.queue_len, e.neighbor));
}

/// Energy-aware least-hop forwarding for the normal class.
///
/// Among the three least-hop candidates the one with the most energy is
/// taken, unless one of its own forwarders is also a neighbor of the
/// deciding node; then it is set aside and the rule repeats. If every
/// candidate is set aside the min-hop, max-energy entry is returned anyway.
pub fn next_hop_normal(fit: &Fit, excluded: &BTreeSet<NodeId>) -> Result<RouteDecision, RouteError> {
    let (pool, upstream) = candidate_pool(fit, excluded);
    if pool.is_empty() {
        return Err(RouteError::NoRoute);
    }
    let rationale = if upstream { Rationale::MinHopMaxEnergy } else { Rationale::Fallback };
    let mut remaining = pool.clone();
    while !remaining.is_empty() {
        let candidates = least_hop(&remaining, CANDIDATES);
        let pick = max_energy(&candidates).expect("non-empty candidates");
        let shares_neighbor = pick.forwarders.iter().any(|f| fit.contains(*f));
        if !shares_neighbor {
            return Ok(RouteDecision { next_hop: pick.neighbor, rationale });
        }
        remaining.retain(|e| e.neighbor != pick.neighbor);
    }
    let pick = max_energy(&least_hop(&pool, CANDIDATES)).expect("non-empty pool");
    Ok(RouteDecision { next_hop: pick.neighbor, rationale: Rationale::Fallback })
}

/// Least-hop neighbor whose energy is at least `e_threshold`.
pub fn primary_reliable(fit: &Fit, e_threshold: f64) -> Result<RouteDecision, RouteError> {
    fit.entries()
        .filter(|e| e.energy >= e_threshold)
        .min_by_key(|e| (e.hop, e.neighbor))
        .map(|e| RouteDecision { next_hop: e.neighbor, rationale: Rationale::PrimaryReliable })
        .ok_or(RouteError::NoRoute)
}

/// The two least-hop neighbors other than `primary`; fewer when the node has
/// fewer neighbors.
pub fn alternates_reliable(fit: &Fit, primary: NodeId) -> Vec<NodeId> {
    let pool: Vec<&FitEntry> = fit.entries().filter(|e| e.neighbor != primary).collect();
    least_hop(&pool, 2).into_iter().map(|e| e.neighbor).collect()
}

/// Source-side path set for the reliable class.
pub fn paths_reliable(fit: &Fit, e_threshold: f64) -> Result<PathSet, RouteError> {
    let primary = primary_reliable(fit, e_threshold)?.next_hop;
    Ok(PathSet { primary, alternates: alternates_reliable(fit, primary) })
}

/// Shared exclusion loop of the PCT-aware selectors: the best ranked
/// candidate that is not already on this pair's path. Fails when every
/// candidate is; the pool is not widened past the upstream neighbors, so a
/// copy is not walked away from the sink to stay disjoint.
fn pct_guided(
    fit: &Fit,
    pct: &mut Pct,
    src: NodeId,
    dst: NodeId,
    excluded: &BTreeSet<NodeId>,
    rank: impl Fn(&mut Vec<&FitEntry>),
) -> Result<RouteDecision, RouteError> {
    let (mut pool, upstream) = candidate_pool(fit, excluded);
    rank(&mut pool);
    // the destination terminates every path, so it is never blocked
    let (skipped, x) = match pool.iter().position(|e| e.neighbor == dst || !pct.on_path(e.neighbor, src, dst)) {
        Some(i) => (i > 0, pool[i].neighbor),
        None => return Err(RouteError::NoRoute),
    };
    pct.observe(x, src, dst);
    let rationale = if !upstream {
        Rationale::Fallback
    } else if skipped {
        Rationale::AlternateReliable
    } else {
        Rationale::PrimaryReliable
    };
    Ok(RouteDecision { next_hop: x, rationale })
}

/// Least-hop forwarding that avoids neighbors already known to carry this
/// source/destination pair. The chosen node is recorded in `pct`.
pub fn next_hop_reliable(
    fit: &Fit,
    pct: &mut Pct,
    src: NodeId,
    dst: NodeId,
    excluded: &BTreeSet<NodeId>,
) -> Result<RouteDecision, RouteError> {
    pct_guided(fit, pct, src, dst, excluded, |pool| pool.sort_by_key(|e| (e.hop, e.neighbor)))
}

/// Least waiting time among the three least-hop candidates.
pub fn next_hop_delay(fit: &Fit, excluded: &BTreeSet<NodeId>) -> Result<RouteDecision, RouteError> {
    let (pool, upstream) = candidate_pool(fit, excluded);
    let mut candidates = least_hop(&pool, CANDIDATES);
    by_wait_then_id(&mut candidates);
    candidates
        .first()
        .map(|e| RouteDecision {
            next_hop: e.neighbor,
            rationale: if upstream { Rationale::MinWait } else { Rationale::Fallback },
        })
        .ok_or(RouteError::NoRoute)
}

/// Source-side path set for the delay-sensitive reliable class: the
/// least-wait candidate plus the one with the next least wait.
pub fn paths_delay_reliable(fit: &Fit, excluded: &BTreeSet<NodeId>) -> Result<PathSet, RouteError> {
    let (pool, _) = candidate_pool(fit, excluded);
    let mut candidates = least_hop(&pool, CANDIDATES);
    by_wait_then_id(&mut candidates);
    let mut it = candidates.into_iter().map(|e| e.neighbor);
    let primary = it.next().ok_or(RouteError::NoRoute)?;
    Ok(PathSet { primary, alternates: it.take(1).collect() })
}

/// PCT-aware forwarding ranked by waiting time, then hop count, then id.
pub fn next_hop_delay_reliable_intermediate(
    fit: &Fit,
    pct: &mut Pct,
    src: NodeId,
    dst: NodeId,
    excluded: &BTreeSet<NodeId>,
) -> Result<RouteDecision, RouteError> {
    pct_guided(fit, pct, src, dst, excluded, |pool| {
        pool.sort_by_key(|e| (e.queue_len, e.hop, e.neighbor))
    })
}

/// Forgets a neighbor that failed to acknowledge.
pub fn remove_failed(fit: &Fit, neighbor: NodeId) -> Fit {
    let mut next = fit.clone();
    next.remove(neighbor);
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{fit_bootstrap, Forwarders, Hops};

    fn e(id: u32, hop: u16, energy: f64, fwd: &[u32], q: u32) -> FitEntry {
        FitEntry {
            neighbor: NodeId(id),
            energy,
            hop: Hops(hop),
            forwarders: fwd.iter().map(|&f| NodeId(f)).collect::<Forwarders>(),
            queue_len: q,
        }
    }

    fn fit_of(entries: Vec<FitEntry>) -> Fit {
        let mut fit = fit_bootstrap(NodeId(100), false);
        for en in entries {
            fit.upsert(en);
        }
        fit
    }

    fn none() -> BTreeSet<NodeId> {
        BTreeSet::new()
    }

    #[test]
    fn normal_prefers_energy_among_least_hop() {
        let fit = fit_of(vec![e(2, 2, 0.9, &[], 0), e(3, 1, 0.4, &[], 0), e(4, 3, 0.5, &[], 0)]);
        let d = next_hop_normal(&fit, &none()).unwrap();
        assert_eq!(d.next_hop, NodeId(2));
        assert_eq!(d.rationale, Rationale::MinHopMaxEnergy);
    }

    #[test]
    fn normal_single_entry() {
        let fit = fit_of(vec![e(7, 1, 0.3, &[], 0)]);
        assert_eq!(next_hop_normal(&fit, &none()).unwrap().next_hop, NodeId(7));
    }

    #[test]
    fn normal_skips_candidate_sharing_a_neighbor() {
        // 2 has the most energy but its forwarder 3 is our neighbor
        let fit = fit_of(vec![e(2, 1, 0.9, &[3], 0), e(3, 1, 0.4, &[], 0), e(4, 1, 0.5, &[], 0)]);
        assert_eq!(next_hop_normal(&fit, &none()).unwrap().next_hop, NodeId(4));
    }

    #[test]
    fn normal_no_route_when_all_excluded() {
        let fit = fit_of(vec![e(2, 1, 0.9, &[], 0)]);
        let excl: BTreeSet<_> = [NodeId(2)].into();
        assert_eq!(next_hop_normal(&fit, &excl), Err(RouteError::NoRoute));
        assert_eq!(next_hop_normal(&fit_of(vec![]), &none()), Err(RouteError::NoRoute));
    }

    #[test]
    fn normal_fallback_when_every_candidate_fails_check() {
        // every 3-entry table whose forwarder lists all hit the neighbor set
        let energies = [0.1, 0.2, 0.3];
        for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            for hops in [[1, 1, 1], [1, 2, 2], [2, 1, 3], [3, 3, 1]] {
                let fit = fit_of(
                    (0..3)
                        .map(|i| {
                            let other = (i as u32 + 1) % 3 + 1;
                            e(i as u32 + 1, hops[i], energies[perm[i]], &[other], 0)
                        })
                        .collect(),
                );
                let d = next_hop_normal(&fit, &none()).unwrap();
                assert_eq!(d.rationale, Rationale::Fallback);
                // direct min-hop max-energy over the same three entries
                let mut all: Vec<&FitEntry> = fit.entries().collect();
                all.sort_by(|a, b| {
                    b.energy.partial_cmp(&a.energy).unwrap().then(a.neighbor.cmp(&b.neighbor))
                });
                assert_eq!(d.next_hop, all[0].neighbor);
            }
        }
    }

    #[test]
    fn normal_prefers_upstream_pool() {
        let mut fit = fit_of(vec![e(1, 1, 0.1, &[], 0), e(2, 2, 0.9, &[], 0), e(3, 2, 0.8, &[], 0)]);
        fit.self_hop = Hops(2);
        let d = next_hop_normal(&fit, &none()).unwrap();
        assert_eq!(d, RouteDecision { next_hop: NodeId(1), rationale: Rationale::MinHopMaxEnergy });
        let excl: BTreeSet<_> = [NodeId(1)].into();
        let d = next_hop_normal(&fit, &excl).unwrap();
        assert_eq!(d, RouteDecision { next_hop: NodeId(2), rationale: Rationale::Fallback });
    }

    #[test]
    fn primary_filters_then_takes_least_hop() {
        let fit = fit_of(vec![e(1, 1, 0.5, &[], 0), e(2, 1, 0.1, &[], 0), e(3, 2, 0.9, &[], 0)]);
        assert_eq!(primary_reliable(&fit, 0.2).unwrap().next_hop, NodeId(1));
        assert_eq!(primary_reliable(&fit_of(vec![e(1, 3, 0.5, &[], 0)]), 0.2).unwrap().next_hop, NodeId(1));
        assert_eq!(primary_reliable(&fit, 1.0), Err(RouteError::NoRoute));
    }

    #[test]
    fn primary_matches_filter_then_min_over_permutations() {
        let base = [(1u32, 1u16, 0.5), (2, 1, 0.1), (3, 2, 0.9), (4, 1, 0.3)];
        let orders = [[0, 1, 2, 3], [3, 2, 1, 0], [1, 3, 0, 2], [2, 0, 3, 1]];
        for order in orders {
            let fit = fit_of(order.iter().map(|&i| e(base[i].0, base[i].1, base[i].2, &[], 0)).collect());
            assert_eq!(primary_reliable(&fit, 0.2).unwrap().next_hop, NodeId(1));
            assert_eq!(primary_reliable(&fit, 0.4).unwrap().next_hop, NodeId(1));
            assert_eq!(primary_reliable(&fit, 0.6).unwrap().next_hop, NodeId(3));
        }
    }

    #[test]
    fn alternates_by_least_hop() {
        let fit = fit_of(vec![e(10, 1, 0.5, &[], 0), e(1, 1, 0.5, &[], 0), e(2, 2, 0.5, &[], 0), e(3, 3, 0.5, &[], 0)]);
        assert_eq!(alternates_reliable(&fit, NodeId(10)), vec![NodeId(1), NodeId(2)]);
        let fit = fit_of(vec![e(10, 1, 0.5, &[], 0), e(1, 2, 0.5, &[], 0)]);
        assert_eq!(alternates_reliable(&fit, NodeId(10)), vec![NodeId(1)]);
        let fit = fit_of(vec![e(10, 1, 0.5, &[], 0)]);
        assert!(alternates_reliable(&fit, NodeId(10)).is_empty());
    }

    #[test]
    fn pct_insert_dedup_and_fifo() {
        let (x, s, k) = (NodeId(1), NodeId(2), NodeId(0));
        let pct = pct_observe(&Pct::default(), x, s, k);
        assert_eq!(pct.rows().copied().collect::<Vec<_>>(), vec![PctEntry { node_id: x, src: s, dst: k }]);
        assert_eq!(pct_observe(&pct, x, s, k), pct);

        let cap = 4;
        let mut pct = Pct::with_capacity(cap);
        for i in 0..=cap as u32 {
            pct.observe(NodeId(i), s, k);
        }
        assert_eq!(pct.len(), cap);
        assert!(!pct.on_path(NodeId(0), s, k));
        assert!(pct.on_path(NodeId(cap as u32), s, k));
        let ids: Vec<u32> = pct.rows().map(|r| r.node_id.0).collect();
        assert_eq!(ids, (1..=cap as u32).collect::<Vec<_>>());
    }

    #[test]
    fn reliable_three_pct_branches() {
        let (src, dst) = (NodeId(50), NodeId(0));
        let fit = fit_of(vec![e(1, 1, 0.5, &[], 0), e(2, 2, 0.5, &[], 0)]);

        let mut pct = Pct::default();
        let d = next_hop_reliable(&fit, &mut pct, src, dst, &none()).unwrap();
        assert_eq!(d.next_hop, NodeId(1));
        assert!(pct.on_path(NodeId(1), src, dst));

        let mut pct = Pct::default();
        pct.observe(NodeId(1), src, dst);
        let d = next_hop_reliable(&fit, &mut pct, src, dst, &none()).unwrap();
        assert_eq!(d.next_hop, NodeId(2));
        assert_eq!(d.rationale, Rationale::AlternateReliable);

        let mut pct = Pct::default();
        pct.observe(NodeId(1), NodeId(51), NodeId(9));
        let d = next_hop_reliable(&fit, &mut pct, src, dst, &none()).unwrap();
        assert_eq!(d.next_hop, NodeId(1));

        let mut pct = Pct::default();
        pct.observe(NodeId(1), src, dst);
        pct.observe(NodeId(2), src, dst);
        assert_eq!(next_hop_reliable(&fit, &mut pct, src, dst, &none()), Err(RouteError::NoRoute));
    }

    #[test]
    fn reliable_never_blocks_destination() {
        let (src, dst) = (NodeId(50), NodeId(0));
        let fit = fit_of(vec![e(0, 0, 0.5, &[], 0), e(2, 1, 0.5, &[], 0)]);
        let mut pct = Pct::default();
        pct.observe(dst, src, dst);
        assert_eq!(next_hop_reliable(&fit, &mut pct, src, dst, &none()).unwrap().next_hop, dst);
    }

    #[test]
    fn delay_picks_least_queue_among_least_hop() {
        let fit = fit_of(vec![e(1, 1, 0.5, &[], 5), e(2, 1, 0.5, &[], 2), e(3, 2, 0.5, &[], 1), e(4, 3, 0.5, &[], 0)]);
        assert_eq!(next_hop_delay(&fit, &none()).unwrap().next_hop, NodeId(3));
        let fit = fit_of(vec![e(4, 1, 0.5, &[], 1), e(2, 1, 0.5, &[], 1), e(3, 2, 0.5, &[], 1)]);
        assert_eq!(next_hop_delay(&fit, &none()).unwrap().next_hop, NodeId(2));
        let fit = fit_of(vec![e(9, 4, 0.5, &[], 7)]);
        assert_eq!(next_hop_delay(&fit, &none()).unwrap().next_hop, NodeId(9));
        assert_eq!(next_hop_delay(&fit_of(vec![]), &none()), Err(RouteError::NoRoute));
    }

    #[test]
    fn delay_matches_brute_force_over_orderings() {
        let base = [(1u32, 1u16, 5u32), (2, 1, 2), (3, 2, 1), (4, 3, 0)];
        let orders = [[0, 1, 2, 3], [3, 2, 1, 0], [2, 3, 0, 1], [1, 0, 3, 2]];
        for order in orders {
            let fit = fit_of(order.iter().map(|&i| e(base[i].0, base[i].1, 0.5, &[], base[i].2)).collect());
            assert_eq!(next_hop_delay(&fit, &none()).unwrap().next_hop, NodeId(3));
        }
    }

    #[test]
    fn delay_reliable_paths() {
        let fit = fit_of(vec![e(1, 1, 0.5, &[], 2), e(2, 1, 0.5, &[], 4), e(3, 2, 0.5, &[], 1)]);
        let ps = paths_delay_reliable(&fit, &none()).unwrap();
        assert_eq!(ps.primary, next_hop_delay(&fit, &none()).unwrap().next_hop);
        assert_eq!(ps, PathSet { primary: NodeId(3), alternates: vec![NodeId(1)] });

        let single = fit_of(vec![e(1, 1, 0.5, &[], 2)]);
        assert!(paths_delay_reliable(&single, &none()).unwrap().alternates.is_empty());

        let equal = fit_of(vec![e(5, 1, 0.5, &[], 1), e(4, 1, 0.5, &[], 1)]);
        let ps = paths_delay_reliable(&equal, &none()).unwrap();
        assert_eq!(ps, PathSet { primary: NodeId(4), alternates: vec![NodeId(5)] });
        assert_eq!(paths_delay_reliable(&fit_of(vec![]), &none()), Err(RouteError::NoRoute));
    }

    #[test]
    fn delay_reliable_paths_brute_force() {
        // all queue assignments in 0..3 on a three-entry table
        for qa in 0..3u32 {
            for qb in 0..3u32 {
                for qc in 0..3u32 {
                    let fit = fit_of(vec![e(1, 1, 0.5, &[], qa), e(2, 1, 0.5, &[], qb), e(3, 2, 0.5, &[], qc)]);
                    let ps = paths_delay_reliable(&fit, &none()).unwrap();
                    let mut ranked = [(qa, 1u32), (qb, 2), (qc, 3)];
                    ranked.sort();
                    assert_eq!(ps.primary, NodeId(ranked[0].1));
                    assert_eq!(ps.alternates, vec![NodeId(ranked[1].1)]);
                }
            }
        }
    }

    #[test]
    fn delay_reliable_intermediate_ranks_by_wait() {
        let (src, dst) = (NodeId(50), NodeId(0));
        let fit = fit_of(vec![e(1, 2, 0.5, &[], 1), e(2, 1, 0.5, &[], 5)]);
        let mut pct = Pct::default();
        assert_eq!(
            next_hop_delay_reliable_intermediate(&fit, &mut pct, src, dst, &none()).unwrap().next_hop,
            NodeId(1)
        );
        let mut pct = Pct::default();
        pct.observe(NodeId(1), src, dst);
        assert_eq!(
            next_hop_delay_reliable_intermediate(&fit, &mut pct, src, dst, &none()).unwrap().next_hop,
            NodeId(2)
        );
        pct.observe(NodeId(2), src, dst);
        assert_eq!(
            next_hop_delay_reliable_intermediate(&fit, &mut pct, src, dst, &none()),
            Err(RouteError::NoRoute)
        );
    }

    #[test]
    fn remove_failed_deletes() {
        let fit = fit_of(vec![e(1, 1, 0.5, &[], 0), e(2, 1, 0.5, &[], 0)]);
        let after = remove_failed(&fit, NodeId(1));
        assert_eq!(after.neighbor_ids().collect::<Vec<_>>(), vec![NodeId(2)]);
        assert_eq!(remove_failed(&after, NodeId(1)), after);
    }
}
