//! Likelihood-ranked flooding router: incremental-average meeting
//! probabilities, complement-likelihood path costs over one-hop vector
//! snapshots, hop-count head / cost tail buffer ranking, and network-wide
//! delivery ACKs that purge obsolete copies.

use crate::ids::{MessageId, NodeId};
use crate::routing::{
    AckEntry, AlertMessage, Buffer, Disposition, PeerLink, PeerView, RejectReason, Router,
};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

/// Per-node meeting probabilities; entries sum to 1 and exclude the owner.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodVector {
    pub owner: NodeId,
    pub f: BTreeMap<NodeId, f64>,
}

impl LikelihoodVector {
    /// Uniform 1/(n-1) over every other node.
    pub fn init(owner: NodeId, n_nodes: u32) -> Self {
        assert!(n_nodes >= 2, "likelihood vector needs at least 2 nodes");
        let p = 1.0 / f64::from(n_nodes - 1);
        let f = (0..n_nodes)
            .map(NodeId)
            .filter(|id| *id != owner)
            .map(|id| (id, p))
            .collect();
        LikelihoodVector { owner, f }
    }

    /// Incremental-average update on meeting `peer`: bump its entry by 1 and
    /// re-normalize to sum 1.
    pub fn meet(&mut self, peer: NodeId) {
        debug_assert!(peer != self.owner);
        *self.f.entry(peer).or_insert(0.0) += 1.0;
        let sum: f64 = self.f.values().sum();
        for v in self.f.values_mut() {
            *v /= sum;
        }
    }

    pub fn sum(&self) -> f64 {
        self.f.values().sum()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    cost: f64,
    node: NodeId,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (cost, node) via reversed comparison
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path costs from `src` over the directed graph whose edge i -> j
/// weighs (1 - f_i[j]), using `own` for src and one snapshot per other owner.
/// Nodes without a vector contribute no out-edges; unreachable destinations
/// cost `f64::INFINITY`.
pub fn path_costs_from(
    src: NodeId,
    own: &LikelihoodVector,
    snapshots: &BTreeMap<NodeId, LikelihoodVector>,
    n_nodes: u32,
) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n_nodes as usize];
    dist[src.0 as usize] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem {
        cost: 0.0,
        node: src,
    });
    while let Some(HeapItem { cost, node }) = heap.pop() {
        if cost > dist[node.0 as usize] {
            continue;
        }
        let vector = if node == src {
            Some(own)
        } else {
            snapshots.get(&node).filter(|v| v.owner == node)
        };
        let Some(vector) = vector else { continue };
        for (&next, &f) in &vector.f {
            if next.0 >= n_nodes {
                continue;
            }
            let w = (1.0 - f).max(0.0);
            let nd = cost + w;
            if nd < dist[next.0 as usize] {
                dist[next.0 as usize] = nd;
                heap.push(HeapItem {
                    cost: nd,
                    node: next,
                });
            }
        }
    }
    dist
}

/// Cost of the cheapest known path `src -> dst`.
pub fn path_cost(
    src: NodeId,
    dst: NodeId,
    own: &LikelihoodVector,
    snapshots: &BTreeMap<NodeId, LikelihoodVector>,
    n_nodes: u32,
) -> f64 {
    debug_assert!(src != dst);
    path_costs_from(src, own, snapshots, n_nodes)[dst.0 as usize]
}

/// Transmission/eviction ranking: copies under the hop threshold go first
/// (ascending hop count), the rest ascending by path cost to destination;
/// ties break on the lower message id. Eviction pops from the back.
pub fn rank_buffer<'a>(
    messages: impl Iterator<Item = &'a AlertMessage>,
    threshold_hops: u32,
    cost_to: impl Fn(NodeId) -> f64,
) -> Vec<MessageId> {
    let mut head: Vec<(u32, MessageId)> = Vec::new();
    let mut tail: Vec<(f64, MessageId)> = Vec::new();
    for m in messages {
        if m.hop_count < threshold_hops {
            head.push((m.hop_count, m.id));
        } else {
            tail.push((cost_to(m.destination), m.id));
        }
    }
    head.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    tail.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    head.iter()
        .map(|&(_, id)| id)
        .chain(tail.iter().map(|&(_, id)| id))
        .collect()
}

#[derive(Debug)]
pub struct MaxPropRouter {
    me: NodeId,
    n_nodes: u32,
    threshold_hops: u32,
    vector: LikelihoodVector,
    /// Newest vector snapshot per owner, with receipt time.
    snapshots: BTreeMap<NodeId, (f64, LikelihoodVector)>,
    /// Delivered-message ids -> ack expiry (the message TTL horizon).
    acks: BTreeMap<MessageId, f64>,
    peers: BTreeMap<NodeId, PeerLink>,
    /// Memoized Dijkstra distances from `me`; invalidated on vector changes.
    costs: Option<Vec<f64>>,
}

impl MaxPropRouter {
    pub fn new(me: NodeId, n_nodes: u32, threshold_hops: u32) -> Self {
        MaxPropRouter {
            me,
            n_nodes,
            threshold_hops,
            vector: LikelihoodVector::init(me, n_nodes),
            snapshots: BTreeMap::new(),
            acks: BTreeMap::new(),
            peers: BTreeMap::new(),
            costs: None,
        }
    }

    pub fn vector(&self) -> &LikelihoodVector {
        &self.vector
    }

    pub fn acked(&self, id: MessageId) -> bool {
        self.acks.contains_key(&id)
    }

    pub fn snapshot_of(&self, owner: NodeId) -> Option<&LikelihoodVector> {
        self.snapshots.get(&owner).map(|(_, v)| v)
    }

    fn ensure_costs(&mut self) {
        if self.costs.is_none() {
            let plain: BTreeMap<NodeId, LikelihoodVector> = self
                .snapshots
                .iter()
                .map(|(k, (_, v))| (*k, v.clone()))
                .collect();
            self.costs = Some(path_costs_from(self.me, &self.vector, &plain, self.n_nodes));
        }
    }
}

impl Router for MaxPropRouter {
    fn apply_meet(&mut self, peer: NodeId) {
        self.vector.meet(peer);
        self.costs = None;
    }

    fn make_view(&self, buffer: &Buffer, now: f64, hop_limit: u32) -> PeerView {
        PeerView::MaxProp {
            summary: crate::epidemic::summary_vector(buffer, now, hop_limit),
            vector: self.vector.clone(),
            acks: self
                .acks
                .iter()
                .filter(|(_, &exp)| exp >= now)
                .map(|(&id, &expires_at)| AckEntry { id, expires_at })
                .collect(),
        }
    }

    fn on_up(&mut self, peer: NodeId, view: PeerView, now: f64) -> Vec<AckEntry> {
        let mut adopted = Vec::new();
        let link = PeerLink {
            has: view.summary().iter().map(|(id, _)| *id).collect(),
            ..PeerLink::default()
        };
        self.peers.insert(peer, link);
        if let PeerView::MaxProp { vector, acks, .. } = view {
            // newest snapshot per owner wins
            let fresh = match self.snapshots.get(&vector.owner) {
                Some((t, _)) => now >= *t,
                None => true,
            };
            if fresh {
                self.snapshots.insert(vector.owner, (now, vector));
                self.costs = None;
            }
            adopted = self.receive_acks(&acks, now);
        }
        adopted
    }

    fn on_down(&mut self, peer: NodeId) {
        self.peers.remove(&peer);
    }

    fn select_for_transfer(
        &mut self,
        peer: NodeId,
        buffer: &Buffer,
        now: f64,
        hop_limit: u32,
    ) -> Vec<MessageId> {
        match self.peers.get(&peer) {
            None => return Vec::new(),
            Some(l) if l.empty_at_epoch == Some(buffer.epoch()) => return Vec::new(),
            Some(_) => {}
        }
        self.ensure_costs();
        let costs = self.costs.as_ref().expect("just ensured");
        let link = self.peers.get(&peer).expect("checked above");
        let acks = &self.acks;
        let candidates: Vec<&AlertMessage> = buffer
            .iter()
            .filter(|m| {
                !m.expired(now, hop_limit)
                    && !link.has.contains(&m.id)
                    && !link.offered.contains(&m.id)
                    && !acks.contains_key(&m.id)
            })
            .collect();
        if candidates.is_empty() {
            let epoch = buffer.epoch();
            if let Some(link) = self.peers.get_mut(&peer) {
                link.empty_at_epoch = Some(epoch);
            }
            return Vec::new();
        }
        // deliverable packets jump the queue; the rest follow the ranking
        let (to_peer, relay): (Vec<&AlertMessage>, Vec<&AlertMessage>) =
            candidates.into_iter().partition(|m| m.destination == peer);
        let mut out: Vec<MessageId> = to_peer.iter().map(|m| m.id).collect();
        out.sort();
        out.extend(rank_buffer(
            relay.into_iter(),
            self.threshold_hops,
            |dest| costs[dest.0 as usize],
        ));
        out
    }

    fn mark_offered(&mut self, peer: NodeId, id: MessageId) {
        if let Some(link) = self.peers.get_mut(&peer) {
            link.offered.insert(id);
        }
    }

    fn on_received(
        &self,
        msg: &AlertMessage,
        _from: NodeId,
        buffer: &Buffer,
        now: f64,
        hop_limit: u32,
    ) -> Disposition {
        if msg.destination == self.me {
            return Disposition::Deliver;
        }
        if self.acks.contains_key(&msg.id) {
            return Disposition::Reject(RejectReason::Acked);
        }
        if buffer.contains(msg.id) {
            return Disposition::Reject(RejectReason::AlreadyHave);
        }
        if msg.expired(now, hop_limit) {
            return Disposition::Reject(RejectReason::Expired);
        }
        Disposition::Store
    }

    fn on_buffer_full(
        &mut self,
        buffer: &Buffer,
        incoming: &AlertMessage,
        _now: f64,
    ) -> Vec<MessageId> {
        self.ensure_costs();
        let costs = self.costs.as_ref().expect("just ensured");
        let all = buffer.iter().chain(std::iter::once(incoming));
        let mut ranked = rank_buffer(all, self.threshold_hops, |d| costs[d.0 as usize]);
        ranked.reverse(); // evict from the back of the transmission order
        ranked
    }

    fn peer_stored(&mut self, peer: NodeId, id: MessageId) {
        if let Some(link) = self.peers.get_mut(&peer) {
            link.has.insert(id);
        }
    }

    fn on_delivered(&mut self, msg: &AlertMessage, _now: f64) -> Option<AckEntry> {
        let entry = AckEntry {
            id: msg.id,
            expires_at: msg.created_at + msg.ttl,
        };
        self.acks.insert(entry.id, entry.expires_at);
        Some(entry)
    }

    fn receive_acks(&mut self, acks: &[AckEntry], now: f64) -> Vec<AckEntry> {
        let mut adopted = Vec::new();
        for a in acks {
            if a.expires_at < now {
                continue; // expired acks are pruned, not forwarded
            }
            if self.acks.insert(a.id, a.expires_at).is_none() {
                adopted.push(*a);
            }
        }
        adopted
    }

    fn sweep(&mut self, now: f64) {
        self.acks.retain(|_, exp| *exp >= now);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nid(i: u32) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn init_is_uniform() {
        let v = LikelihoodVector::init(nid(0), 3);
        assert_eq!(v.f.len(), 2);
        assert!((v.f[&nid(1)] - 0.5).abs() < 1e-12);
        assert!((v.f[&nid(2)] - 0.5).abs() < 1e-12);

        let v = LikelihoodVector::init(nid(0), 121);
        assert!((v.f[&nid(7)] - 1.0 / 120.0).abs() < 1e-12);

        let v = LikelihoodVector::init(nid(0), 2);
        assert!((v.f[&nid(1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn meet_matches_hand_computation() {
        // uniform n=3 owned by A(0): {B:0.5, C:0.5}; meet B -> {B:0.75, C:0.25}
        let mut v = LikelihoodVector::init(nid(0), 3);
        v.meet(nid(1));
        assert!((v.f[&nid(1)] - 0.75).abs() < 1e-9);
        assert!((v.f[&nid(2)] - 0.25).abs() < 1e-9);
        // meet B again -> {B:0.875, C:0.125}
        v.meet(nid(1));
        assert!((v.f[&nid(1)] - 0.875).abs() < 1e-9);
        assert!((v.f[&nid(2)] - 0.125).abs() < 1e-9);
        assert!((v.sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn meet_preserves_norm_over_random_sequences() {
        let mut rng = crate::rng::SimRng::new(5);
        let mut v = LikelihoodVector::init(nid(0), 10);
        for _ in 0..500 {
            let peer = nid(1 + rng.gen_range(9) as u32);
            v.meet(peer);
            assert!((v.sum() - 1.0).abs() < 1e-9);
            assert!(v.f.values().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn path_cost_examples() {
        // direct edge with f = 1.0 costs 0
        let mut own = LikelihoodVector::init(nid(0), 2);
        own.f.insert(nid(1), 1.0);
        assert_eq!(path_cost(nid(0), nid(1), &own, &BTreeMap::new(), 2), 0.0);

        // A:{B:0.75, C:0.25}, B:{A:0.5, C:0.5} -> cost(A->C) = 0.75
        let mut a = LikelihoodVector::init(nid(0), 3);
        a.f.insert(nid(1), 0.75);
        a.f.insert(nid(2), 0.25);
        let mut b = LikelihoodVector::init(nid(1), 3);
        b.f.insert(nid(0), 0.5);
        b.f.insert(nid(2), 0.5);
        let mut snaps = BTreeMap::new();
        snaps.insert(nid(1), b);
        let c = path_cost(nid(0), nid(2), &a, &snaps, 3);
        assert!((c - 0.75).abs() < 1e-12);

        // no snapshots, n=121: only the own-vector edge exists
        let own = LikelihoodVector::init(nid(0), 121);
        let c = path_cost(nid(0), nid(77), &own, &BTreeMap::new(), 121);
        assert!((c - (1.0 - 1.0 / 120.0)).abs() < 1e-12);
    }

    #[test]
    fn unreachable_destination_costs_infinity() {
        let own = LikelihoodVector {
            owner: nid(0),
            f: BTreeMap::new(),
        };
        assert!(path_cost(nid(0), nid(1), &own, &BTreeMap::new(), 3).is_infinite());
    }

    fn m(id: u32, dest: u32, hops: u32) -> AlertMessage {
        AlertMessage {
            id: MessageId(id),
            source: nid(0),
            destination: nid(dest),
            size: 100,
            created_at: 0.0,
            ttl: 1000.0,
            hop_count: hops,
        }
    }

    #[test]
    fn rank_head_by_hops_then_tail_by_cost() {
        let msgs = [m(1, 5, 0), m(2, 6, 2), m(3, 7, 5)];
        let ranked = rank_buffer(msgs.iter(), 3, |_| 1.0);
        assert_eq!(ranked, vec![MessageId(1), MessageId(2), MessageId(3)]);

        // all above threshold: ascending cost
        let msgs = [m(1, 5, 9), m(2, 6, 9)];
        let ranked = rank_buffer(msgs.iter(), 3, |d| if d == nid(5) { 0.9 } else { 0.3 });
        assert_eq!(ranked, vec![MessageId(2), MessageId(1)]);

        // full tie: lower id first
        let msgs = [m(9, 5, 9), m(4, 5, 9)];
        let ranked = rank_buffer(msgs.iter(), 3, |_| 0.5);
        assert_eq!(ranked, vec![MessageId(4), MessageId(9)]);
    }

    #[test]
    fn rank_is_a_total_order() {
        let mut rng = crate::rng::SimRng::new(11);
        let mut msgs: Vec<AlertMessage> = (0..20)
            .map(|i| m(i, rng.gen_range(8) as u32, rng.gen_range(6) as u32))
            .collect();
        let cost = |d: NodeId| f64::from(d.0) * 0.1;
        let a = rank_buffer(msgs.iter(), 3, cost);
        msgs.reverse();
        let b = rank_buffer(msgs.iter(), 3, cost);
        assert_eq!(a, b, "ranking must not depend on input order");
    }

    #[test]
    fn ack_lifecycle() {
        let mut r = MaxPropRouter::new(nid(0), 4, 3);
        let delivered = m(1, 0, 2);
        let ack = r.on_delivered(&delivered, 10.0).unwrap();
        assert_eq!(ack.id, MessageId(1));
        assert!(r.acked(MessageId(1)));

        // unknown ack is stored without any deletion to perform
        let mut other = MaxPropRouter::new(nid(1), 4, 3);
        let adopted = other.receive_acks(&[ack], 10.0);
        assert_eq!(adopted.len(), 1);
        // duplicate adoption is a no-op
        assert!(other.receive_acks(&[ack], 10.0).is_empty());

        // expired ack: pruned, not forwarded
        let mut third = MaxPropRouter::new(nid(2), 4, 3);
        let stale = AckEntry {
            id: MessageId(9),
            expires_at: 5.0,
        };
        assert!(third.receive_acks(&[stale], 10.0).is_empty());
        assert!(!third.acked(MessageId(9)));

        other.sweep(2000.0);
        assert!(!other.acked(MessageId(1)));
    }

    #[test]
    fn snapshot_newest_wins() {
        let mut r = MaxPropRouter::new(nid(0), 3, 3);
        let mut v1 = LikelihoodVector::init(nid(1), 3);
        v1.meet(nid(0));
        let buffer = Buffer::new(1000);
        r.on_up(
            nid(1),
            PeerView::MaxProp {
                summary: vec![],
                vector: v1.clone(),
                acks: vec![],
            },
            1.0,
        );
        assert_eq!(r.snapshot_of(nid(1)).unwrap(), &v1);
        let mut v2 = v1.clone();
        v2.meet(nid(2));
        r.on_down(nid(1));
        r.on_up(
            nid(1),
            PeerView::MaxProp {
                summary: vec![],
                vector: v2.clone(),
                acks: vec![],
            },
            2.0,
        );
        assert_eq!(r.snapshot_of(nid(1)).unwrap(), &v2);
        let _ = buffer;
    }
}
