//! Router-agnostic message buffer, TTL/hop enforcement, and the callback
//! contract both routers implement.

use crate::error::{Result, SimError};
use crate::ids::{MessageId, NodeId};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq)]
pub struct AlertMessage {
    pub id: MessageId,
    pub source: NodeId,
    pub destination: NodeId,
    pub size: u64,
    pub created_at: f64,
    pub ttl: f64,
    /// Completed transfers on this copy's path from the source.
    pub hop_count: u32,
}

impl AlertMessage {
    /// Expiry: strictly older than the TTL, or strictly past the hop limit.
    pub fn expired(&self, now: f64, hop_limit: u32) -> bool {
        now - self.created_at > self.ttl || self.hop_count > hop_limit
    }
}

/// Byte-capacity-bounded store of message copies, keyed by id (so iteration
/// is oldest-created first).
#[derive(Debug)]
pub struct Buffer {
    capacity: u64,
    occupancy: u64,
    entries: BTreeMap<MessageId, AlertMessage>,
    /// Bumped on every insert; lets routers cache "nothing to offer" results.
    epoch: u64,
}

impl Buffer {
    pub fn new(capacity: u64) -> Self {
        Buffer {
            capacity,
            occupancy: 0,
            entries: BTreeMap::new(),
            epoch: 0,
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn occupancy(&self) -> u64 {
        self.occupancy
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn contains(&self, id: MessageId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn get(&self, id: MessageId) -> Option<&AlertMessage> {
        self.entries.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &AlertMessage> {
        self.entries.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = MessageId> + '_ {
        self.entries.keys().copied()
    }

    fn insert(&mut self, msg: AlertMessage) {
        debug_assert!(!self.entries.contains_key(&msg.id));
        self.occupancy += msg.size;
        self.entries.insert(msg.id, msg);
        self.epoch += 1;
        debug_assert!(self.occupancy <= self.capacity);
    }

    pub fn remove(&mut self, id: MessageId) -> Option<AlertMessage> {
        let removed = self.entries.remove(&id);
        if let Some(m) = &removed {
            self.occupancy -= m.size;
        }
        removed
    }

    /// Drop every expired message; returns them oldest-first.
    pub fn sweep_expired(&mut self, now: f64, hop_limit: u32) -> Vec<AlertMessage> {
        let dead: Vec<MessageId> = self
            .entries
            .values()
            .filter(|m| m.expired(now, hop_limit))
            .map(|m| m.id)
            .collect();
        dead.into_iter().filter_map(|id| self.remove(id)).collect()
    }
}

/// True iff `node` is the message's destination. First delivery of an id is
/// counted once by the metrics; later arrivals are duplicates.
pub fn deliver_check(msg: &AlertMessage, node: NodeId) -> bool {
    msg.destination == node
}

/// Outcome of offering a message to a buffer.
#[derive(Debug, PartialEq, Eq)]
pub enum Admit {
    Stored {
        evicted: Vec<MessageId>,
    },
    AlreadyHave,
    /// The router's eviction ranking chose the incoming message itself before
    /// enough space was freed; nothing was evicted or stored.
    RejectedIncoming,
}

/// Insert `msg`, evicting router-chosen victims if space is short. The router
/// returns a victim ordering over buffer + incoming; walking it stops either
/// when the message fits or when the incoming message itself comes up.
pub fn admit(
    buffer: &mut Buffer,
    msg: AlertMessage,
    router: &mut dyn Router,
    now: f64,
) -> Result<Admit> {
    if buffer.contains(msg.id) {
        return Ok(Admit::AlreadyHave);
    }
    if msg.size > buffer.capacity() {
        return Err(SimError::Oversize {
            id: msg.id.0,
            size: msg.size,
            capacity: buffer.capacity(),
        });
    }
    if buffer.occupancy() + msg.size <= buffer.capacity() {
        buffer.insert(msg);
        return Ok(Admit::Stored {
            evicted: Vec::new(),
        });
    }
    let order = router.on_buffer_full(buffer, &msg, now);
    let mut to_evict = Vec::new();
    let mut freed = 0u64;
    for victim in order {
        if victim == msg.id {
            return Ok(Admit::RejectedIncoming);
        }
        if let Some(m) = buffer.get(victim) {
            freed += m.size;
            to_evict.push(victim);
            if buffer.occupancy() - freed + msg.size <= buffer.capacity() {
                break;
            }
        }
    }
    if buffer.occupancy() - freed + msg.size > buffer.capacity() {
        // ranking exhausted without naming the incoming message; treat as reject
        return Ok(Admit::RejectedIncoming);
    }
    for id in &to_evict {
        buffer.remove(*id);
    }
    buffer.insert(msg);
    Ok(Admit::Stored { evicted: to_evict })
}

/// What a router wants done with a received copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Disposition {
    /// This node is the destination.
    Deliver,
    Store,
    Reject(RejectReason),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RejectReason {
    AlreadyHave,
    Acked,
    Expired,
}

/// Delivered-message acknowledgement (MaxProp); expires with the message TTL.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AckEntry {
    pub id: MessageId,
    pub expires_at: f64,
}

/// Protocol state exchanged when a contact comes up.
#[derive(Clone, Debug)]
pub enum PeerView {
    Epidemic {
        /// (id, destination) of every non-expired buffered message.
        summary: Vec<(MessageId, NodeId)>,
    },
    MaxProp {
        summary: Vec<(MessageId, NodeId)>,
        vector: crate::maxprop::LikelihoodVector,
        acks: Vec<AckEntry>,
    },
}

impl PeerView {
    pub fn summary(&self) -> &[(MessageId, NodeId)] {
        match self {
            PeerView::Epidemic { summary } | PeerView::MaxProp { summary, .. } => summary,
        }
    }
}

/// Per-live-peer anti-entropy record: what the peer advertises holding and
/// what we already offered during this contact. Dropped at contact-down.
#[derive(Clone, Debug, Default)]
pub struct PeerLink {
    pub has: BTreeSet<MessageId>,
    pub offered: BTreeSet<MessageId>,
    /// Buffer epoch at which select last came up empty, if it did.
    pub empty_at_epoch: Option<u64>,
}

/// The contract every router implements. Pairwise exchanges (summaries,
/// likelihood vectors, ACK sets) are mediated by the engine.
pub trait Router {
    /// MaxProp likelihood bump; no-op for Epidemic. Applied once per contact-up.
    fn apply_meet(&mut self, peer: NodeId);

    /// Snapshot handed to the peer at contact-up.
    fn make_view(&self, buffer: &Buffer, now: f64, hop_limit: u32) -> PeerView;

    /// Contact-up callback; returns ACK entries newly adopted from the peer
    /// (the engine drops acked copies and cascades them further).
    fn on_up(&mut self, peer: NodeId, view: PeerView, now: f64) -> Vec<AckEntry>;

    fn on_down(&mut self, peer: NodeId);

    /// Ordered candidates the peer lacks; the engine transfers front-to-back.
    fn select_for_transfer(
        &mut self,
        peer: NodeId,
        buffer: &Buffer,
        now: f64,
        hop_limit: u32,
    ) -> Vec<MessageId>;

    /// Record that a message was put on the wire toward `peer` this contact.
    fn mark_offered(&mut self, peer: NodeId, id: MessageId);

    fn on_received(
        &self,
        msg: &AlertMessage,
        from: NodeId,
        buffer: &Buffer,
        now: f64,
        hop_limit: u32,
    ) -> Disposition;

    /// Victim ordering (worst first) over buffer contents plus the incoming
    /// message, consulted when the buffer cannot fit `incoming`.
    fn on_buffer_full(
        &mut self,
        buffer: &Buffer,
        incoming: &AlertMessage,
        now: f64,
    ) -> Vec<MessageId>;

    /// A live peer stored a new message: refresh its advertised summary.
    fn peer_stored(&mut self, peer: NodeId, id: MessageId);

    /// Called on the destination's router at first delivery; MaxProp mints an
    /// ACK here.
    fn on_delivered(&mut self, msg: &AlertMessage, now: f64) -> Option<AckEntry>;

    /// Merge ACKs learned from a neighbor; returns the newly adopted ones.
    fn receive_acks(&mut self, acks: &[AckEntry], now: f64) -> Vec<AckEntry>;

    /// Per-tick housekeeping (ACK expiry pruning).
    fn sweep(&mut self, now: f64);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epidemic::EpidemicRouter;

    fn msg(id: u32, size: u64, created_at: f64) -> AlertMessage {
        AlertMessage {
            id: MessageId(id),
            source: NodeId(0),
            destination: NodeId(9),
            size,
            created_at,
            ttl: 100.0,
            hop_count: 0,
        }
    }

    #[test]
    fn admit_stores_when_space_allows() {
        let mut buf = Buffer::new(5 * 1024 * 1024);
        let mut router = EpidemicRouter::new(NodeId(0));
        let r = admit(&mut buf, msg(1, 10_240, 0.0), &mut router, 0.0).unwrap();
        assert_eq!(r, Admit::Stored { evicted: vec![] });
        assert_eq!(buf.occupancy(), 10_240);
    }

    #[test]
    fn duplicate_is_already_have() {
        let mut buf = Buffer::new(1 << 20);
        let mut router = EpidemicRouter::new(NodeId(0));
        admit(&mut buf, msg(1, 100, 0.0), &mut router, 0.0).unwrap();
        let r = admit(&mut buf, msg(1, 100, 0.0), &mut router, 0.0).unwrap();
        assert_eq!(r, Admit::AlreadyHave);
        assert_eq!(buf.occupancy(), 100);
    }

    #[test]
    fn epidemic_eviction_drops_oldest_created() {
        let mut buf = Buffer::new(250);
        let mut router = EpidemicRouter::new(NodeId(0));
        admit(&mut buf, msg(1, 100, 10.0), &mut router, 10.0).unwrap();
        admit(&mut buf, msg(2, 100, 20.0), &mut router, 20.0).unwrap();
        // 100 bytes of headroom left; a 150-byte message must evict the oldest
        let r = admit(&mut buf, msg(3, 150, 30.0), &mut router, 30.0).unwrap();
        assert_eq!(
            r,
            Admit::Stored {
                evicted: vec![MessageId(1)]
            }
        );
        assert!(!buf.contains(MessageId(1)));
        assert!(buf.contains(MessageId(2)) && buf.contains(MessageId(3)));
    }

    #[test]
    fn incoming_older_than_everything_is_rejected() {
        let mut buf = Buffer::new(200);
        let mut router = EpidemicRouter::new(NodeId(0));
        admit(&mut buf, msg(5, 100, 50.0), &mut router, 50.0).unwrap();
        admit(&mut buf, msg(6, 100, 60.0), &mut router, 60.0).unwrap();
        // full; incoming created earlier than both residents -> it is the victim
        let r = admit(&mut buf, msg(4, 100, 40.0), &mut router, 60.0).unwrap();
        assert_eq!(r, Admit::RejectedIncoming);
        assert_eq!(buf.len(), 2);
    }

    #[test]
    fn oversize_is_an_error() {
        let mut buf = Buffer::new(100);
        let mut router = EpidemicRouter::new(NodeId(0));
        assert!(matches!(
            admit(&mut buf, msg(1, 101, 0.0), &mut router, 0.0),
            Err(SimError::Oversize { .. })
        ));
    }

    #[test]
    fn sweep_boundaries_are_strict() {
        let mut buf = Buffer::new(1 << 20);
        let mut router = EpidemicRouter::new(NodeId(0));
        admit(&mut buf, msg(1, 10, 0.0), &mut router, 0.0).unwrap(); // ttl 100
        let removed = buf.sweep_expired(100.0, 40);
        assert!(removed.is_empty(), "aged exactly ttl is kept");
        let removed = buf.sweep_expired(101.0, 40);
        assert_eq!(removed.len(), 1, "aged ttl+1 is removed");

        let mut hop_hi = msg(2, 10, 200.0);
        hop_hi.hop_count = 40;
        admit(&mut buf, hop_hi, &mut router, 200.0).unwrap();
        assert!(
            buf.sweep_expired(200.0, 40).is_empty(),
            "hop_count == limit kept"
        );
        let mut hop_over = msg(3, 10, 200.0);
        hop_over.hop_count = 41;
        admit(&mut buf, hop_over, &mut router, 200.0).unwrap();
        let removed = buf.sweep_expired(200.0, 40);
        assert_eq!(removed.len(), 1, "hop_count > limit removed");
    }

    #[test]
    fn deliver_check_is_destination_equality() {
        let m = msg(1, 10, 0.0);
        assert!(deliver_check(&m, NodeId(9)));
        assert!(!deliver_check(&m, NodeId(3)));
    }

    proptest::proptest! {
        /// Occupancy never exceeds capacity under arbitrary admit/sweep mixes.
        #[test]
        fn buffer_never_exceeds_capacity(
            capacity in 50u64..2000,
            ops in proptest::collection::vec((0u64..400, 0f64..100.0, 0u8..4), 1..120),
        ) {
            let mut buf = Buffer::new(capacity);
            let mut router = EpidemicRouter::new(NodeId(0));
            for (i, (size, created, op)) in ops.into_iter().enumerate() {
                if op == 3 {
                    buf.sweep_expired(created + 200.0, 40);
                } else if size > 0 {
                    let m = AlertMessage {
                        id: MessageId(i as u32),
                        source: NodeId(0),
                        destination: NodeId(9),
                        size,
                        created_at: created,
                        ttl: 100.0,
                        hop_count: 0,
                    };
                    let _ = admit(&mut buf, m, &mut router, created);
                }
                proptest::prop_assert!(buf.occupancy() <= buf.capacity());
                let sum: u64 = buf.iter().map(|m| m.size).sum();
                proptest::prop_assert_eq!(sum, buf.occupancy());
            }
        }
    }
}
