//! Deterministic, seeded simulator of store-carry-forward alert dissemination
//! over a subway network.
//!
//! Trains move along ingested subway lines, detect each other by radio range
//! (Bluetooth- or Wi-Fi-class), and relay alert messages with either the
//! Epidemic or the MaxProp routing protocol. Every run is a pure function of
//! (config, graph, seed): reports are byte-identical across repeats.

pub mod config;
pub mod engine;
pub mod epidemic;
pub mod error;
pub mod geo;
pub mod ids;
pub mod link;
pub mod maxprop;
pub mod metrics;
pub mod mobility;
pub mod net;
pub mod rng;
pub mod routing;
pub mod traffic;

pub use config::{RadioChoice, RouterChoice, ScenarioConfig};
pub use error::{Result, SimError};
pub use geo::{GeoRoute, RouteGraph};
pub use ids::{MessageId, NodeId};
pub use metrics::ScenarioReport;
