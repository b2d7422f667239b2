//! The protocol world of one run: per-node buffers and routers, live
//! contacts, in-flight transfers, ACK cascades, and the metric counters.
//!
//! The engine drives this from mobility and contact detection; scripted
//! tests drive it directly with hand-written contact sequences.

use crate::config::RouterChoice;
use crate::epidemic::EpidemicRouter;
use crate::error::Result;
use crate::ids::{MessageId, NodeId};
use crate::link::{pair, LinkLayer, Transfer};
use crate::maxprop::MaxPropRouter;
use crate::metrics::MetricsCollector;
use crate::routing::{admit, Admit, AlertMessage, Buffer, Disposition, Router};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

pub struct NetConfig {
    pub n_nodes: u32,
    pub router: RouterChoice,
    pub buffer_capacity: u64,
    pub bandwidth_bps: f64,
    pub hop_limit: u32,
    pub maxprop_threshold_hops: u32,
}

pub struct DtnNet {
    cfg: NetConfig,
    buffers: Vec<Buffer>,
    routers: Vec<Box<dyn Router>>,
    links: LinkLayer,
    live: BTreeSet<(NodeId, NodeId)>,
    contact_up_at: BTreeMap<(NodeId, NodeId), f64>,
    pub collector: MetricsCollector,
}

impl DtnNet {
    pub fn new(cfg: NetConfig) -> Self {
        let routers: Vec<Box<dyn Router>> = (0..cfg.n_nodes)
            .map(|i| -> Box<dyn Router> {
                match cfg.router {
                    RouterChoice::Epidemic => Box::new(EpidemicRouter::new(NodeId(i))),
                    RouterChoice::MaxProp => Box::new(MaxPropRouter::new(
                        NodeId(i),
                        cfg.n_nodes,
                        cfg.maxprop_threshold_hops,
                    )),
                }
            })
            .collect();
        let buffers = (0..cfg.n_nodes)
            .map(|_| Buffer::new(cfg.buffer_capacity))
            .collect();
        DtnNet {
            cfg,
            buffers,
            routers,
            links: LinkLayer::default(),
            live: BTreeSet::new(),
            contact_up_at: BTreeMap::new(),
            collector: MetricsCollector::default(),
        }
    }

    pub fn buffer(&self, n: NodeId) -> &Buffer {
        &self.buffers[n.0 as usize]
    }

    pub fn live_contacts(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.live
    }

    pub fn hop_counters(&self) -> (u64, u64, u64, u64) {
        (
            self.links.initiated,
            self.links.completed,
            self.links.aborted,
            self.links.in_flight(),
        )
    }

    fn live_peers_of(&self, n: NodeId) -> Vec<NodeId> {
        self.live
            .iter()
            .filter_map(|&(a, b)| {
                if a == n {
                    Some(b)
                } else if b == n {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Store a freshly created message at its source.
    pub fn create_message(&mut self, msg: AlertMessage, now: f64) -> Result<()> {
        let src = msg.source;
        let id = msg.id;
        self.collector.record_created();
        let outcome = admit(
            &mut self.buffers[src.0 as usize],
            msg,
            self.routers[src.0 as usize].as_mut(),
            now,
        )?;
        if matches!(outcome, Admit::Stored { .. }) {
            self.collector.record_held(id, src);
            self.broadcast_stored(src, id);
        }
        Ok(())
    }

    /// Tell every live neighbor of `node` that it now holds `id`.
    fn broadcast_stored(&mut self, node: NodeId, id: MessageId) {
        for peer in self.live_peers_of(node) {
            self.routers[peer.0 as usize].peer_stored(node, id);
        }
    }

    /// Propagate newly adopted ACKs breadth-first over live contacts,
    /// deleting acked copies as they land.
    fn cascade_acks(&mut self, start: NodeId, acks: Vec<crate::routing::AckEntry>, now: f64) {
        let mut queue = VecDeque::new();
        if !acks.is_empty() {
            queue.push_back((start, acks));
        }
        while let Some((node, entries)) = queue.pop_front() {
            for id in entries.iter().map(|a| a.id) {
                self.buffers[node.0 as usize].remove(id);
            }
            for peer in self.live_peers_of(node) {
                let adopted = self.routers[peer.0 as usize].receive_acks(&entries, now);
                if !adopted.is_empty() {
                    queue.push_back((peer, adopted));
                }
            }
        }
    }

    pub fn contact_up(&mut self, a: NodeId, b: NodeId, now: f64) {
        let key = pair(a, b);
        debug_assert!(!self.live.contains(&key));
        self.live.insert(key);
        self.contact_up_at.insert(key, now);
        // meeting updates first, so exchanged vectors are current
        self.routers[a.0 as usize].apply_meet(b);
        self.routers[b.0 as usize].apply_meet(a);
        let view_a = self.routers[a.0 as usize].make_view(
            &self.buffers[a.0 as usize],
            now,
            self.cfg.hop_limit,
        );
        let view_b = self.routers[b.0 as usize].make_view(
            &self.buffers[b.0 as usize],
            now,
            self.cfg.hop_limit,
        );
        let adopted_a = self.routers[a.0 as usize].on_up(b, view_b, now);
        let adopted_b = self.routers[b.0 as usize].on_up(a, view_a, now);
        self.cascade_acks(a, adopted_a, now);
        self.cascade_acks(b, adopted_b, now);
    }

    pub fn contact_down(&mut self, a: NodeId, b: NodeId, now: f64) {
        let key = pair(a, b);
        if !self.live.remove(&key) {
            return;
        }
        self.routers[a.0 as usize].on_down(b);
        self.routers[b.0 as usize].on_down(a);
        if let Some(up) = self.contact_up_at.remove(&key) {
            self.collector.record_contact(now - up);
        }
    }

    /// Advance in-flight transfers (aborting any whose contact dropped),
    /// deliver completions, then start new transfers on free directed links.
    pub fn advance(&mut self, dt: f64, now: f64) -> Result<()> {
        let (completed, _aborted) = self.links.advance(dt, self.cfg.bandwidth_bps, &self.live);
        for t in completed {
            self.receive(t, now)?;
        }
        self.start_transfers(now);
        Ok(())
    }

    fn receive(&mut self, transfer: Transfer, now: f64) -> Result<()> {
        let Transfer {
            mut msg, from, to, ..
        } = transfer;
        msg.hop_count += 1;
        let router = &self.routers[to.0 as usize];
        let disposition = router.on_received(
            &msg,
            from,
            &self.buffers[to.0 as usize],
            now,
            self.cfg.hop_limit,
        );
        match disposition {
            Disposition::Deliver => {
                self.collector.record_held(msg.id, to);
                let first =
                    self.collector
                        .record_delivery(msg.id, now - msg.created_at, msg.hop_count);
                if first {
                    if let Some(ack) = self.routers[to.0 as usize].on_delivered(&msg, now) {
                        self.cascade_acks(to, vec![ack], now);
                    }
                }
                // flooding keeps a copy at the destination so its summary
                // advertises the id; MaxProp relies on the ACK instead
                if self.cfg.router == RouterChoice::Epidemic
                    && !self.buffers[to.0 as usize].contains(msg.id)
                    && !msg.expired(now, self.cfg.hop_limit)
                {
                    let id = msg.id;
                    let outcome = admit(
                        &mut self.buffers[to.0 as usize],
                        msg,
                        self.routers[to.0 as usize].as_mut(),
                        now,
                    )?;
                    if matches!(outcome, Admit::Stored { .. }) {
                        self.broadcast_stored(to, id);
                    }
                }
            }
            Disposition::Store => {
                let id = msg.id;
                let outcome = admit(
                    &mut self.buffers[to.0 as usize],
                    msg,
                    self.routers[to.0 as usize].as_mut(),
                    now,
                )?;
                if matches!(outcome, Admit::Stored { .. }) {
                    self.collector.record_held(id, to);
                    self.broadcast_stored(to, id);
                }
            }
            Disposition::Reject(_) => {}
        }
        Ok(())
    }

    fn start_transfers(&mut self, now: f64) {
        let contacts: Vec<(NodeId, NodeId)> = self.live.iter().copied().collect();
        for (a, b) in contacts {
            for (from, to) in [(a, b), (b, a)] {
                if self.links.is_busy(from, to) {
                    continue;
                }
                let selected = self.routers[from.0 as usize].select_for_transfer(
                    to,
                    &self.buffers[from.0 as usize],
                    now,
                    self.cfg.hop_limit,
                );
                let Some(&id) = selected.first() else {
                    continue;
                };
                let msg = self.buffers[from.0 as usize]
                    .get(id)
                    .expect("selected message is buffered")
                    .clone();
                self.links
                    .start(from, to, msg, now)
                    .expect("link checked free");
                self.routers[from.0 as usize].mark_offered(to, id);
            }
        }
    }

    /// TTL / hop-limit sweep plus router housekeeping.
    pub fn sweep(&mut self, now: f64) {
        for i in 0..self.buffers.len() {
            self.buffers[i].sweep_expired(now, self.cfg.hop_limit);
            self.routers[i].sweep(now);
        }
    }

    /// Close open contacts, drain in-flight transfers, and build the report.
    pub fn finalize(mut self, scenario: String, now: f64) -> crate::metrics::ScenarioReport {
        let open: Vec<(NodeId, NodeId)> = self.live.iter().copied().collect();
        for (a, b) in open {
            self.contact_down(a, b, now);
        }
        let inflight = self.links.drain();
        crate::metrics::ScenarioReport::build(
            scenario,
            self.collector,
            self.cfg.n_nodes,
            self.links.initiated,
            self.links.completed,
            self.links.aborted,
            inflight,
        )
    }
}
