//! Alert generation: fixed-interval events between randomly drawn
//! source/destination pairs, capped at a target count.

use crate::error::{Result, SimError};
use crate::ids::NodeId;
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DestMode {
    Random,
    /// Destination drawn from nodes on the source's route, ahead of its
    /// current direction (resolved at creation time).
    Downline,
}

#[derive(Clone, Debug)]
pub struct TrafficSpec {
    pub first_at: f64,
    pub interval: f64,
    pub count_target: u32,
    pub size: u64,
    pub sources: Vec<NodeId>,
    pub dests: Vec<NodeId>,
    pub mode: DestMode,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DestChoice {
    Fixed(NodeId),
    /// Resolved by the engine when the message is created.
    Downline,
}

#[derive(Clone, Copy, Debug)]
pub struct TrafficEvent {
    pub time: f64,
    pub source: NodeId,
    pub dest: DestChoice,
}

/// Events at first_at, first_at + interval, ... while the time is inside the
/// run and the count target is not reached. Destinations redraw until they
/// differ from the source.
pub fn schedule(spec: &TrafficSpec, duration: f64, rng: &mut SimRng) -> Result<Vec<TrafficEvent>> {
    assert!(spec.interval > 0.0, "interval must be positive");
    assert!(
        !spec.sources.is_empty() && !spec.dests.is_empty(),
        "pools must be non-empty"
    );
    if spec.mode == DestMode::Random
        && spec.dests.len() == 1
        && spec.sources.len() == 1
        && spec.dests[0] == spec.sources[0]
    {
        return Err(SimError::InvalidConfig(
            "traffic pools leave no destination different from the source".into(),
        ));
    }
    let mut events = Vec::new();
    let mut k = 0u32;
    loop {
        if k >= spec.count_target {
            break;
        }
        let time = spec.first_at + f64::from(k) * spec.interval;
        if time >= duration {
            break;
        }
        let source = spec.sources[rng.gen_range(spec.sources.len() as u64) as usize];
        let dest = match spec.mode {
            DestMode::Downline => DestChoice::Downline,
            DestMode::Random => {
                let mut d = spec.dests[rng.gen_range(spec.dests.len() as u64) as usize];
                while d == source {
                    d = spec.dests[rng.gen_range(spec.dests.len() as u64) as usize];
                }
                DestChoice::Fixed(d)
            }
        };
        events.push(TrafficEvent { time, source, dest });
        k += 1;
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(n: u32) -> Vec<NodeId> {
        (0..n).map(NodeId).collect()
    }

    fn default_spec() -> TrafficSpec {
        TrafficSpec {
            first_at: 40.0,
            interval: 82.8,
            count_target: 521,
            size: 10_240,
            sources: pool(120),
            dests: pool(120),
            mode: DestMode::Random,
        }
    }

    #[test]
    fn default_schedule_creates_exactly_521() {
        let mut rng = SimRng::stream(1, "traffic");
        let events = schedule(&default_spec(), 43_200.0, &mut rng).unwrap();
        assert_eq!(events.len(), 521);
        assert!((events[0].time - 40.0).abs() < 1e-9);
        assert!(events.last().unwrap().time < 43_200.0);
    }

    #[test]
    fn count_target_zero_is_empty() {
        let mut rng = SimRng::stream(1, "traffic");
        let spec = TrafficSpec {
            count_target: 0,
            ..default_spec()
        };
        assert!(schedule(&spec, 43_200.0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn single_disjoint_pools_pin_the_pair() {
        let mut rng = SimRng::stream(1, "traffic");
        let spec = TrafficSpec {
            sources: vec![NodeId(3)],
            dests: vec![NodeId(7)],
            count_target: 10,
            ..default_spec()
        };
        let events = schedule(&spec, 43_200.0, &mut rng).unwrap();
        assert_eq!(events.len(), 10);
        for e in events {
            assert_eq!(e.source, NodeId(3));
            assert_eq!(e.dest, DestChoice::Fixed(NodeId(7)));
        }
    }

    #[test]
    fn same_seed_same_events_and_no_self_addressing() {
        let spec = default_spec();
        let a = schedule(&spec, 43_200.0, &mut SimRng::stream(9, "traffic")).unwrap();
        let b = schedule(&spec, 43_200.0, &mut SimRng::stream(9, "traffic")).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.source, y.source);
            assert_eq!(x.dest, y.dest);
            if let DestChoice::Fixed(d) = x.dest {
                assert_ne!(d, x.source);
            }
        }
    }

    #[test]
    fn identical_singleton_pools_error() {
        let mut rng = SimRng::new(1);
        let spec = TrafficSpec {
            sources: vec![NodeId(3)],
            dests: vec![NodeId(3)],
            ..default_spec()
        };
        assert!(schedule(&spec, 43_200.0, &mut rng).is_err());
    }
}
