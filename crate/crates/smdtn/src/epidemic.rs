//! Flooding router with summary-vector anti-entropy: a node offers a peer
//! every buffered message the peer's summary lacks, destination-addressed
//! copies first, then oldest-created first. No ACKs.

use crate::ids::{MessageId, NodeId};
use crate::routing::{
    AckEntry, AlertMessage, Buffer, Disposition, PeerLink, PeerView, RejectReason, Router,
};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug)]
pub struct EpidemicRouter {
    me: NodeId,
    /// Live contacts only; cleared on contact-down.
    peers: BTreeMap<NodeId, PeerLink>,
}

impl EpidemicRouter {
    pub fn new(me: NodeId) -> Self {
        EpidemicRouter {
            me,
            peers: BTreeMap::new(),
        }
    }
}

/// Ids of every non-expired buffered message.
pub fn summary_vector(buffer: &Buffer, now: f64, hop_limit: u32) -> Vec<(MessageId, NodeId)> {
    buffer
        .iter()
        .filter(|m| !m.expired(now, hop_limit))
        .map(|m| (m.id, m.destination))
        .collect()
}

/// theirs \ mine, with messages addressed to `me` first, then oldest-created
/// first (ids are creation-ordered).
pub fn request_missing(
    mine: &BTreeSet<MessageId>,
    theirs: &[(MessageId, NodeId)],
    me: NodeId,
) -> Vec<MessageId> {
    let mut missing: Vec<(MessageId, NodeId)> = theirs
        .iter()
        .copied()
        .filter(|(id, _)| !mine.contains(id))
        .collect();
    missing.sort_by_key(|&(id, dest)| (dest != me, id));
    missing.into_iter().map(|(id, _)| id).collect()
}

impl Router for EpidemicRouter {
    fn apply_meet(&mut self, _peer: NodeId) {}

    fn make_view(&self, buffer: &Buffer, now: f64, hop_limit: u32) -> PeerView {
        PeerView::Epidemic {
            summary: summary_vector(buffer, now, hop_limit),
        }
    }

    fn on_up(&mut self, peer: NodeId, view: PeerView, _now: f64) -> Vec<AckEntry> {
        let link = PeerLink {
            has: view.summary().iter().map(|(id, _)| *id).collect(),
            ..PeerLink::default()
        };
        self.peers.insert(peer, link);
        Vec::new()
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
        let Some(link) = self.peers.get_mut(&peer) else {
            return Vec::new();
        };
        if link.empty_at_epoch == Some(buffer.epoch()) {
            return Vec::new();
        }
        let mut out: Vec<&AlertMessage> = buffer
            .iter()
            .filter(|m| {
                !m.expired(now, hop_limit)
                    && !link.has.contains(&m.id)
                    && !link.offered.contains(&m.id)
            })
            .collect();
        if out.is_empty() {
            link.empty_at_epoch = Some(buffer.epoch());
            return Vec::new();
        }
        out.sort_by_key(|m| (m.destination != peer, m.id));
        out.into_iter().map(|m| m.id).collect()
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
        // FIFO policy: oldest-created goes first
        let mut all: Vec<(f64, MessageId)> = buffer.iter().map(|m| (m.created_at, m.id)).collect();
        all.push((incoming.created_at, incoming.id));
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        all.into_iter().map(|(_, id)| id).collect()
    }

    fn peer_stored(&mut self, peer: NodeId, id: MessageId) {
        if let Some(link) = self.peers.get_mut(&peer) {
            link.has.insert(id);
        }
    }

    fn on_delivered(&mut self, _msg: &AlertMessage, _now: f64) -> Option<AckEntry> {
        None
    }

    fn receive_acks(&mut self, _acks: &[AckEntry], _now: f64) -> Vec<AckEntry> {
        Vec::new()
    }

    fn sweep(&mut self, _now: f64) {}
}
