//! Time-stepped event loop: per tick, in fixed order, (1) traffic, (2)
//! mobility, (3) contact detection, (4) router connection callbacks, (5)
//! transfer advancement and new starts, (6) expiry sweep. Everything iterates
//! in sorted-id order, so a run is a pure function of (config, graph, seed).

use crate::config::ScenarioConfig;
use crate::error::{Result, SimError};
use crate::geo::RouteGraph;
use crate::ids::{MessageId, NodeId};
use crate::link::detect_contacts;
use crate::metrics::ScenarioReport;
use crate::mobility::{place_initial, step, TrainState};
use crate::net::{DtnNet, NetConfig};
use crate::rng::SimRng;
use crate::routing::AlertMessage;
use crate::traffic::{schedule, DestChoice, TrafficEvent};

/// Simulation clock held as an integer tick count; `now` is always exactly
/// `tick_index * tick`, so there is no accumulated float drift.
#[derive(Clone, Copy, Debug)]
pub struct SimClock {
    tick: f64,
    tick_index: u64,
}

impl SimClock {
    pub fn new(tick: f64) -> Self {
        SimClock {
            tick,
            tick_index: 0,
        }
    }

    pub fn advance(&mut self) {
        self.tick_index += 1;
    }

    pub fn now(&self) -> f64 {
        self.tick_index as f64 * self.tick
    }

    pub fn tick_index(&self) -> u64 {
        self.tick_index
    }
}

/// Named independent RNG stream for (seed, purpose).
pub fn rng_stream(seed: u64, purpose: &str) -> SimRng {
    SimRng::stream(seed, purpose)
}

/// Resolve a downline destination: a node on the source's route, strictly
/// ahead of its current direction. Falls back to any other node when the
/// source is the last one downline.
fn resolve_downline(
    trains: &[TrainState],
    source: NodeId,
    rng: &mut SimRng,
    n_pool: u32,
) -> NodeId {
    let src = &trains[source.0 as usize];
    let ahead: Vec<NodeId> = trains
        .iter()
        .filter(|t| {
            t.node != source
                && t.node.0 < n_pool
                && t.route == src.route
                && (t.offset - src.offset) * src.direction > 0.0
        })
        .map(|t| t.node)
        .collect();
    if ahead.is_empty() {
        let mut d = NodeId(rng.gen_range(u64::from(n_pool)) as u32);
        while d == source {
            d = NodeId(rng.gen_range(u64::from(n_pool)) as u32);
        }
        d
    } else {
        ahead[rng.gen_range(ahead.len() as u64) as usize]
    }
}

/// Execute one scenario to completion.
pub fn run(cfg: &ScenarioConfig, graph: &RouteGraph) -> Result<ScenarioReport> {
    cfg.validate()?;
    if graph.routes.is_empty() {
        return Err(SimError::EmptyDataset);
    }

    let mut placement_rng = rng_stream(cfg.seed, "placement");
    let mut traffic_rng = rng_stream(cfg.seed, "traffic");
    // reserved stream so adding randomized tie-breaks cannot shift the others
    let _tiebreak_rng = rng_stream(cfg.seed, "tiebreak");

    let mut trains = place_initial(
        graph,
        cfg.n_local,
        cfg.n_express,
        &cfg.event_pins,
        &cfg.movement,
        &mut placement_rng,
    )?;
    let events: Vec<TrafficEvent> =
        schedule(&cfg.traffic_spec(), cfg.duration_sec, &mut traffic_rng)?;
    let mut next_event = 0usize;
    let mut next_msg_id = 0u32;

    let profile = cfg.radio_profile();
    let mut net = DtnNet::new(NetConfig {
        n_nodes: cfg.n_nodes(),
        router: cfg.router,
        buffer_capacity: cfg.buffer_capacity_bytes,
        bandwidth_bps: profile.bandwidth_bps,
        hop_limit: cfg.hop_limit,
        maxprop_threshold_hops: cfg.maxprop_threshold_hops,
    });

    let mut clock = SimClock::new(cfg.tick_sec);
    let n_ticks = (cfg.duration_sec / cfg.tick_sec).ceil() as u64;
    let mut positions: Vec<(f64, f64)> = vec![(0.0, 0.0); trains.len()];
    let n_pool = cfg.n_local + cfg.n_express;
    // radio phases run on their own grid so contact windows and hop rates do
    // not depend on the integrator tick
    let radio_interval = cfg.radio_update_interval_sec.max(cfg.tick_sec);
    let mut last_radio_at = 0.0f64;

    for _ in 0..n_ticks {
        clock.advance();
        let now = clock.now();
        let tick = clock.tick_index();
        let fail = |e: SimError| SimError::Runtime {
            tick,
            source: Box::new(e),
        };

        // (1) traffic
        while next_event < events.len() && events[next_event].time <= now {
            let ev = events[next_event];
            next_event += 1;
            let dest = match ev.dest {
                DestChoice::Fixed(d) => d,
                DestChoice::Downline => {
                    resolve_downline(&trains, ev.source, &mut traffic_rng, n_pool)
                }
            };
            let msg = AlertMessage {
                id: MessageId(next_msg_id),
                source: ev.source,
                destination: dest,
                size: cfg.msg_size_bytes,
                created_at: ev.time,
                ttl: cfg.ttl_sec,
                hop_count: 0,
            };
            next_msg_id += 1;
            net.create_message(msg, now).map_err(fail)?;
        }

        // (2) mobility
        for t in trains.iter_mut() {
            step(t, graph, &cfg.movement, cfg.tick_sec);
        }

        let radio_due = now - last_radio_at >= radio_interval - 1e-9;
        if radio_due {
            let dt_radio = now - last_radio_at;
            last_radio_at = now;

            for (i, t) in trains.iter().enumerate() {
                positions[i] = t.position(graph);
            }

            // (3) contact detection + (4) connection callbacks, downs first
            let (ups, downs) = detect_contacts(&positions, profile.range_m, net.live_contacts());
            for (a, b) in downs {
                net.contact_down(a, b, now);
            }
            for (a, b) in ups {
                net.contact_up(a, b, now);
            }

            // (5) transfers: advance, deliver, then start on free links
            net.advance(dt_radio, now).map_err(fail)?;
        }

        // (6) TTL / hop-limit sweep
        net.sweep(now);
    }

    Ok(net.finalize(cfg.scenario_label(), clock.now()))
}
