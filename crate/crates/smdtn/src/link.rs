//! Range-based contact detection and timed byte transfers over directed
//! links, with abort-on-disconnect.

use crate::error::{Result, SimError};
use crate::ids::{MessageId, NodeId};
use crate::routing::AlertMessage;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug)]
pub struct RadioProfile {
    pub name: &'static str,
    pub range_m: f64,
    pub bandwidth_bps: f64,
}

impl RadioProfile {
    pub fn bluetooth() -> Self {
        RadioProfile {
            name: "bluetooth",
            range_m: 10.0,
            bandwidth_bps: 250_000.0,
        }
    }

    pub fn wifi() -> Self {
        RadioProfile {
            name: "wifi",
            range_m: 30.0,
            bandwidth_bps: 1_250_000.0,
        }
    }
}

/// Canonical unordered node pair (`a < b`) identifying a contact.
pub type ContactPair = (NodeId, NodeId);

/// Canonical unordered pair: `a < b`.
pub fn pair(a: NodeId, b: NodeId) -> ContactPair {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Compare positions against the radio range: a pair is up iff the Euclidean
/// distance is <= range. Returns pairs newly up and newly down, sorted.
pub fn detect_contacts(
    positions: &[(f64, f64)],
    range_m: f64,
    previous: &BTreeSet<ContactPair>,
) -> (Vec<ContactPair>, Vec<ContactPair>) {
    let r2 = range_m * range_m;
    let mut current = BTreeSet::new();
    for (i, &(xi, yi)) in positions.iter().enumerate() {
        for (j, &(xj, yj)) in positions.iter().enumerate().skip(i + 1) {
            let dx = xi - xj;
            let dy = yi - yj;
            if dx * dx + dy * dy <= r2 {
                current.insert((NodeId(i as u32), NodeId(j as u32)));
            }
        }
    }
    let ups = current.difference(previous).copied().collect();
    let downs = previous.difference(&current).copied().collect();
    (ups, downs)
}

/// One in-flight message copy on a directed link. The carried message is a
/// snapshot: the sender may expire or drop its own copy mid-flight.
#[derive(Clone, Debug)]
pub struct Transfer {
    pub msg: AlertMessage,
    pub from: NodeId,
    pub to: NodeId,
    pub bytes_total: u64,
    pub bytes_done: f64,
    pub started_at: f64,
}

/// Active transfers plus the initiated/completed/aborted hop counters.
/// Half-duplex per direction: at most one transfer per directed link.
#[derive(Debug, Default)]
pub struct LinkLayer {
    active: BTreeMap<(NodeId, NodeId), Transfer>,
    pub initiated: u64,
    pub completed: u64,
    pub aborted: u64,
}

impl LinkLayer {
    pub fn is_busy(&self, from: NodeId, to: NodeId) -> bool {
        self.active.contains_key(&(from, to))
    }

    pub fn in_flight(&self) -> u64 {
        self.active.len() as u64
    }

    pub fn start(
        &mut self,
        from: NodeId,
        to: NodeId,
        msg: AlertMessage,
        now: f64,
    ) -> Result<MessageId> {
        if self.is_busy(from, to) {
            return Err(SimError::BusyLink {
                from: from.0,
                to: to.0,
            });
        }
        let id = msg.id;
        let bytes_total = msg.size;
        self.active.insert(
            (from, to),
            Transfer {
                msg,
                from,
                to,
                bytes_total,
                bytes_done: 0.0,
                started_at: now,
            },
        );
        self.initiated += 1;
        Ok(id)
    }

    /// Advance every active transfer by `dt` at `bandwidth` bytes/s. A
    /// transfer whose contact has dropped aborts and delivers nothing; one
    /// that reaches its full size (>=) completes.
    pub fn advance(
        &mut self,
        dt: f64,
        bandwidth_bps: f64,
        live: &BTreeSet<(NodeId, NodeId)>,
    ) -> (Vec<Transfer>, Vec<Transfer>) {
        let mut completed = Vec::new();
        let mut aborted = Vec::new();
        let keys: Vec<(NodeId, NodeId)> = self.active.keys().copied().collect();
        for key in keys {
            let link_up = live.contains(&pair(key.0, key.1));
            let t = self.active.get_mut(&key).expect("key just listed");
            if !link_up {
                aborted.push(self.active.remove(&key).expect("present"));
                self.aborted += 1;
                continue;
            }
            t.bytes_done += bandwidth_bps * dt;
            if t.bytes_done >= t.bytes_total as f64 {
                let mut done = self.active.remove(&key).expect("present");
                done.bytes_done = done.bytes_total as f64;
                completed.push(done);
                self.completed += 1;
            }
        }
        (completed, aborted)
    }

    /// Abort everything still in flight (end of run); returns how many.
    pub fn drain(&mut self) -> u64 {
        let n = self.active.len() as u64;
        self.active.clear();
        n
    }
}
