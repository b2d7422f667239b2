//! Train movement: constant-speed travel along a route, dwell at stations,
//! express skipping, and reversal at termini. Event nodes are stationary.

use crate::error::{Result, SimError};
use crate::geo::RouteGraph;
use crate::ids::NodeId;
use crate::rng::SimRng;

pub const MPH_TO_MPS: f64 = 0.44704;
/// 17.4 mph, the network-average train speed.
pub const DEFAULT_LOCAL_SPEED_MPS: f64 = 17.4 * MPH_TO_MPS;
/// 55 mph, the network's top speed.
pub const DEFAULT_EXPRESS_SPEED_MPS: f64 = 55.0 * MPH_TO_MPS;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Local,
    Express,
    /// Stationary node pinned at a fixed route offset.
    Event,
}

#[derive(Clone, Copy, Debug)]
pub struct MovementConfig {
    pub local_speed_mps: f64,
    pub express_speed_mps: f64,
    pub dwell_sec: f64,
    /// Turnaround hold at a terminus before reversing.
    pub terminus_dwell_sec: f64,
}

impl Default for MovementConfig {
    fn default() -> Self {
        MovementConfig {
            local_speed_mps: DEFAULT_LOCAL_SPEED_MPS,
            express_speed_mps: DEFAULT_EXPRESS_SPEED_MPS,
            dwell_sec: 30.0,
            terminus_dwell_sec: 360.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainState {
    pub node: NodeId,
    pub kind: NodeKind,
    /// Index into `graph.routes`.
    pub route: usize,
    /// Arc offset along the route, meters. Always within [0, route length].
    pub offset: f64,
    /// +1.0 toward increasing offset, -1.0 toward 0.
    pub direction: f64,
    pub speed_max: f64,
    pub dwell_remaining: f64,
}

impl TrainState {
    pub fn position(&self, graph: &RouteGraph) -> (f64, f64) {
        graph.routes[self.route].position_at(self.offset)
    }

    fn stops_at(&self, express_stop: bool) -> bool {
        match self.kind {
            NodeKind::Local => true,
            NodeKind::Express => express_stop,
            NodeKind::Event => false,
        }
    }
}

/// Place `n_local` + `n_express` trains round-robin across routes with
/// uniform initial offsets and directions, plus any pinned event nodes.
pub fn place_initial(
    graph: &RouteGraph,
    n_local: u32,
    n_express: u32,
    event_pins: &[(usize, f64)],
    cfg: &MovementConfig,
    rng: &mut SimRng,
) -> Result<Vec<TrainState>> {
    if n_local + n_express == 0 {
        return Err(SimError::EmptyScenario);
    }
    assert!(!graph.routes.is_empty(), "graph has no routes");
    let n_routes = graph.routes.len();
    let mut out = Vec::with_capacity((n_local + n_express) as usize + event_pins.len());
    for i in 0..n_local + n_express {
        let kind = if i < n_local {
            NodeKind::Local
        } else {
            NodeKind::Express
        };
        let route = i as usize % n_routes;
        let len = graph.routes[route].total_len();
        out.push(TrainState {
            node: NodeId(i),
            kind,
            route,
            offset: rng.next_f64() * len,
            direction: rng.sign(),
            speed_max: match kind {
                NodeKind::Local => cfg.local_speed_mps,
                NodeKind::Express => cfg.express_speed_mps,
                NodeKind::Event => 0.0,
            },
            dwell_remaining: 0.0,
        });
    }
    for (i, &(route, offset)) in event_pins.iter().enumerate() {
        if route >= n_routes {
            return Err(SimError::InvalidConfig(format!(
                "event pin route index {route} out of range ({n_routes} routes)"
            )));
        }
        let len = graph.routes[route].total_len();
        if !(0.0..=len).contains(&offset) {
            return Err(SimError::InvalidConfig(format!(
                "event pin offset {offset} outside route length {len}"
            )));
        }
        out.push(TrainState {
            node: NodeId(n_local + n_express + i as u32),
            kind: NodeKind::Event,
            route,
            offset,
            direction: 1.0,
            speed_max: 0.0,
            dwell_remaining: 0.0,
        });
    }
    Ok(out)
}

/// Next station offset strictly ahead of `from` in `dir` where this train
/// kind stops. Termini are always stops, so a target always exists.
fn next_stop(train: &TrainState, stations: &[crate::geo::Station], len: f64) -> f64 {
    if train.direction > 0.0 {
        for s in stations {
            if s.offset > train.offset && train.stops_at(s.express_stop) {
                return s.offset;
            }
        }
        len
    } else {
        for s in stations.iter().rev() {
            if s.offset < train.offset && train.stops_at(s.express_stop) {
                return s.offset;
            }
        }
        0.0
    }
}

/// Advance one train by `dt` seconds: dwell first, then move toward the next
/// stopping station, clamping and dwelling on arrival; direction reverses
/// after the dwell at a terminus.
pub fn step(train: &mut TrainState, graph: &RouteGraph, cfg: &MovementConfig, dt: f64) {
    debug_assert!(dt > 0.0);
    if train.kind == NodeKind::Event || train.speed_max <= 0.0 {
        return;
    }
    let route = &graph.routes[train.route];
    let len = route.total_len();
    let mut rem = dt;
    // a few station arrivals at most fit in one tick; bound the loop anyway
    for _ in 0..64 {
        if rem <= 0.0 {
            break;
        }
        if train.dwell_remaining > 0.0 {
            let used = rem.min(train.dwell_remaining);
            train.dwell_remaining -= used;
            rem -= used;
            if train.dwell_remaining > 0.0 {
                break;
            }
            // dwell finished at a terminus: reverse before moving on
            if train.offset <= 0.0 || train.offset >= len {
                train.direction = if train.offset <= 0.0 { 1.0 } else { -1.0 };
            }
            continue;
        }
        // defensive: placed exactly on a terminus heading outward
        if train.offset <= 0.0 && train.direction < 0.0 {
            train.direction = 1.0;
        } else if train.offset >= len && train.direction > 0.0 {
            train.direction = -1.0;
        }
        let target = next_stop(train, &route.stations, len);
        let distance = (target - train.offset).abs();
        let travel = train.speed_max * rem;
        if travel < distance {
            train.offset += train.direction * travel;
            break;
        }
        // arrive exactly at the stop and start dwelling
        rem -= distance / train.speed_max;
        train.offset = target;
        train.dwell_remaining = if target <= 0.0 || target >= len {
            cfg.terminus_dwell_sec
        } else {
            cfg.dwell_sec
        };
    }
    train.offset = train.offset.clamp(0.0, len);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{build_graph, GeoRoute, RouteKind, EARTH_RADIUS_M};

    fn graph_of_len(len_m: f64, spacing: f64) -> RouteGraph {
        let dlat = (len_m / EARTH_RADIUS_M).to_degrees();
        let r = GeoRoute {
            route_id: "T".into(),
            kind: RouteKind::Local,
            vertices: vec![(-73.95, 40.70), (-73.95, 40.70 + dlat)],
        };
        build_graph(&[r], spacing, 3, None).unwrap()
    }

    fn local_at(offset: f64, _graph: &RouteGraph) -> TrainState {
        TrainState {
            node: NodeId(0),
            kind: NodeKind::Local,
            route: 0,
            offset,
            direction: 1.0,
            speed_max: DEFAULT_LOCAL_SPEED_MPS,
            dwell_remaining: 0.0,
        }
    }

    #[test]
    fn placement_counts_and_ranges() {
        let g = graph_of_len(1000.0, 800.0);
        let mut rng = SimRng::stream(42, "placement");
        let trains = place_initial(&g, 60, 60, &[], &MovementConfig::default(), &mut rng).unwrap();
        assert_eq!(trains.len(), 120);
        assert_eq!(trains[0].node, NodeId(0));
        assert!(matches!(trains[0].kind, NodeKind::Local));
        assert!(matches!(trains[60].kind, NodeKind::Express));
        let len = g.routes[0].total_len();
        for t in &trains {
            assert!(t.offset >= 0.0 && t.offset <= len);
            assert_eq!(t.dwell_remaining, 0.0);
        }
    }

    #[test]
    fn placement_is_deterministic_per_seed() {
        let g = graph_of_len(1000.0, 800.0);
        let cfg = MovementConfig::default();
        let a = place_initial(&g, 10, 10, &[], &cfg, &mut SimRng::stream(42, "placement")).unwrap();
        let b = place_initial(&g, 10, 10, &[], &cfg, &mut SimRng::stream(42, "placement")).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.offset, y.offset);
            assert_eq!(x.direction, y.direction);
        }
    }

    #[test]
    fn empty_scenario_is_an_error() {
        let g = graph_of_len(1000.0, 800.0);
        let mut rng = SimRng::new(1);
        assert!(matches!(
            place_initial(&g, 0, 0, &[], &MovementConfig::default(), &mut rng),
            Err(SimError::EmptyScenario)
        ));
    }

    #[test]
    fn free_run_distance_matches_speed() {
        // stations every 800 m; from offset 0 the first stop ahead is 800 m,
        // so 10 s of travel stays short of any station
        let g = graph_of_len(2000.0, 800.0);
        let cfg = MovementConfig::default();
        let mut t = local_at(0.0, &g);
        step(&mut t, &g, &cfg, 10.0);
        let expect = DEFAULT_LOCAL_SPEED_MPS * 10.0;
        assert!((t.offset - expect).abs() < 1e-6, "offset {}", t.offset);
        assert!((t.offset - 77.8).abs() < 0.05);
    }

    #[test]
    fn express_passes_non_express_station() {
        // stations at 0,800,1600,2400,3200,4000; express stops 0,2400,4000
        let g = graph_of_len(4000.0, 800.0);
        let cfg = MovementConfig::default();
        let mut t = local_at(700.0, &g);
        t.kind = NodeKind::Express;
        t.speed_max = DEFAULT_EXPRESS_SPEED_MPS;
        step(&mut t, &g, &cfg, 10.0);
        // passed 800 without dwelling
        assert!(t.offset > 800.0);
        assert_eq!(t.dwell_remaining, 0.0);
    }

    #[test]
    fn local_dwells_at_station() {
        let g = graph_of_len(2000.0, 800.0);
        let cfg = MovementConfig::default();
        let mut t = local_at(795.0, &g);
        step(&mut t, &g, &cfg, 1.0);
        assert_eq!(t.offset, 800.0);
        assert!(t.dwell_remaining > 0.0 && t.dwell_remaining < cfg.dwell_sec);
    }

    #[test]
    fn terminus_reverses_after_dwell() {
        let g = graph_of_len(2000.0, 800.0);
        let cfg = MovementConfig {
            terminus_dwell_sec: 5.0,
            ..MovementConfig::default()
        };
        let len = g.routes[0].total_len();
        let mut t = local_at(len, &g);
        t.dwell_remaining = 1.0;
        step(&mut t, &g, &cfg, 1.0);
        // dwell just expired exactly at the tick boundary: direction flips
        assert_eq!(t.direction, -1.0);
        assert_eq!(t.offset, len);
        step(&mut t, &g, &cfg, 1.0);
        assert!(t.offset < len);
    }

    #[test]
    fn express_default_speed_is_55mph() {
        assert!((DEFAULT_EXPRESS_SPEED_MPS - 24.587).abs() < 1e-3);
        assert!((DEFAULT_LOCAL_SPEED_MPS - 7.7785).abs() < 1e-4);
    }

    proptest::proptest! {
        /// Offset stays within route bounds over arbitrary dt sequences.
        #[test]
        fn offsets_stay_in_bounds_under_random_steps(
            start in 0f64..2999.0,
            dts in proptest::collection::vec(0.05f64..25.0, 1..300),
        ) {
            let g = graph_of_len(3000.0, 800.0);
            let cfg =
                MovementConfig { dwell_sec: 3.0, terminus_dwell_sec: 5.0, ..Default::default() };
            let len = g.routes[0].total_len();
            let mut t = local_at(start.min(len), &g);
            for dt in dts {
                step(&mut t, &g, &cfg, dt);
                proptest::prop_assert!(t.offset >= 0.0 && t.offset <= len);
                proptest::prop_assert!(t.dwell_remaining >= 0.0);
            }
        }
    }

    #[test]
    fn trajectory_is_deterministic() {
        let g = graph_of_len(3000.0, 800.0);
        let cfg = MovementConfig::default();
        let mut a = local_at(123.0, &g);
        let mut b = local_at(123.0, &g);
        for _ in 0..1000 {
            step(&mut a, &g, &cfg, 0.5);
            step(&mut b, &g, &cfg, 0.5);
            assert_eq!(a.offset, b.offset);
            assert_eq!(a.direction, b.direction);
        }
    }
}
