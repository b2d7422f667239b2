//! Identifier newtypes. Both ids are dense indices; their numeric order is the
//! deterministic iteration order used everywhere in the engine.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Index of a node in the scenario roster (trains first, then event nodes).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

/// Sequential message identifier. Lower id means created earlier, so sorting
/// by id is sorting by creation time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.0)
    }
}

/// Node counts per group; maps a [`NodeId`] to its display name (`L3`, `E17`,
/// `e0` for stationary event nodes).
#[derive(Clone, Copy, Debug)]
pub struct NodeRoster {
    pub n_local: u32,
    pub n_express: u32,
    pub n_event: u32,
}

impl NodeRoster {
    pub fn total(&self) -> u32 {
        self.n_local + self.n_express + self.n_event
    }

    pub fn name(&self, id: NodeId) -> String {
        let i = id.0;
        if i < self.n_local {
            format!("L{i}")
        } else if i < self.n_local + self.n_express {
            format!("E{}", i - self.n_local)
        } else {
            format!("e{}", i - self.n_local - self.n_express)
        }
    }
}
