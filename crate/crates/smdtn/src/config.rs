//! Scenario configuration: line-oriented `key = value` text with `#`
//! comments. Unknown keys are hard errors.

use crate::error::{Result, SimError};
use crate::ids::NodeId;
use crate::link::RadioProfile;
use crate::mobility::MovementConfig;
use crate::traffic::{DestMode, TrafficSpec};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouterChoice {
    Epidemic,
    MaxProp,
}

impl RouterChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            RouterChoice::Epidemic => "epidemic",
            RouterChoice::MaxProp => "maxprop",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadioChoice {
    Bluetooth,
    Wifi,
}

impl RadioChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            RadioChoice::Bluetooth => "bluetooth",
            RadioChoice::Wifi => "wifi",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub duration_sec: f64,
    pub tick_sec: f64,
    pub seed: u64,
    pub n_local: u32,
    pub n_express: u32,
    /// Stationary event nodes pinned at (route index, offset m).
    pub event_pins: Vec<(usize, f64)>,
    pub movement: MovementConfig,
    pub station_spacing_m: f64,
    pub express_every_k: usize,
    pub radio: RadioChoice,
    pub range_override_m: Option<f64>,
    pub bandwidth_override_bps: Option<f64>,
    /// Radio update grid, seconds: contact scans and transfer scheduling run
    /// at this interval (or every tick when the tick is coarser), so link
    /// dynamics do not depend on the integrator tick size.
    pub radio_update_interval_sec: f64,
    pub router: RouterChoice,
    pub msg_size_bytes: u64,
    pub ttl_sec: f64,
    pub hop_limit: u32,
    pub buffer_capacity_bytes: u64,
    pub traffic_first_at_sec: f64,
    pub traffic_interval_sec: f64,
    pub traffic_count_target: u32,
    pub traffic_dest_mode: DestMode,
    pub maxprop_threshold_hops: u32,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            duration_sec: 43_200.0,
            tick_sec: 0.5,
            seed: 1,
            n_local: 60,
            n_express: 60,
            event_pins: Vec::new(),
            movement: MovementConfig::default(),
            station_spacing_m: 800.0,
            express_every_k: 3,
            radio: RadioChoice::Bluetooth,
            range_override_m: None,
            bandwidth_override_bps: None,
            radio_update_interval_sec: 0.5,
            router: RouterChoice::Epidemic,
            msg_size_bytes: 10_240,
            ttl_sec: 21_600.0,
            hop_limit: 40,
            buffer_capacity_bytes: 50 * 1024 * 1024,
            traffic_first_at_sec: 40.0,
            traffic_interval_sec: 82.8,
            traffic_count_target: 521,
            traffic_dest_mode: DestMode::Random,
            maxprop_threshold_hops: 3,
        }
    }
}

impl ScenarioConfig {
    pub fn radio_profile(&self) -> RadioProfile {
        let mut p = match self.radio {
            RadioChoice::Bluetooth => RadioProfile::bluetooth(),
            RadioChoice::Wifi => RadioProfile::wifi(),
        };
        if let Some(r) = self.range_override_m {
            p.range_m = r;
        }
        if let Some(b) = self.bandwidth_override_bps {
            p.bandwidth_bps = b;
        }
        p
    }

    pub fn n_nodes(&self) -> u32 {
        self.n_local + self.n_express + self.event_pins.len() as u32
    }

    pub fn traffic_spec(&self) -> TrafficSpec {
        let trains: Vec<NodeId> = (0..self.n_local + self.n_express).map(NodeId).collect();
        TrafficSpec {
            first_at: self.traffic_first_at_sec,
            interval: self.traffic_interval_sec,
            count_target: self.traffic_count_target,
            size: self.msg_size_bytes,
            sources: trains.clone(),
            dests: trains,
            mode: self.traffic_dest_mode,
        }
    }

    pub fn scenario_label(&self) -> String {
        format!(
            "{}-{}-seed{}",
            self.router.as_str(),
            self.radio.as_str(),
            self.seed
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.duration_sec <= 0.0 {
            return bad("sim.durationSec must be > 0".into());
        }
        if !(self.tick_sec > 0.0 && self.tick_sec <= 1.0) {
            return bad("sim.tickSec must be in (0, 1]".into());
        }
        if self.n_local + self.n_express == 0 {
            return Err(SimError::EmptyScenario);
        }
        if self.movement.local_speed_mps <= 0.0 || self.movement.express_speed_mps <= 0.0 {
            return bad("train speeds must be positive".into());
        }
        if self.movement.dwell_sec < 0.0 || self.movement.terminus_dwell_sec < 0.0 {
            return bad("dwell times must be >= 0".into());
        }
        if self.station_spacing_m <= 0.0 {
            return bad("movement.stationSpacingM must be > 0".into());
        }
        let p = self.radio_profile();
        if p.range_m <= 0.0 || p.bandwidth_bps <= 0.0 {
            return bad("radio range and bandwidth must be positive".into());
        }
        if self.radio_update_interval_sec <= 0.0 {
            return bad("radio.updateIntervalSec must be > 0".into());
        }
        if self.msg_size_bytes == 0 {
            return bad("msg.sizeBytes must be > 0".into());
        }
        if self.msg_size_bytes > self.buffer_capacity_bytes {
            return bad("msg.sizeBytes exceeds buffer.capacityBytes".into());
        }
        if self.ttl_sec <= 0.0 {
            return bad("msg.ttlSec must be > 0".into());
        }
        if self.traffic_interval_sec <= 0.0 {
            return bad("traffic.intervalSec must be > 0".into());
        }
        if self.traffic_first_at_sec < 0.0 || self.traffic_first_at_sec > self.duration_sec {
            return bad("traffic.firstAtSec must lie within the run".into());
        }
        Ok(())
    }
}

fn parse_event_pins(value: &str, line: usize) -> Result<Vec<(usize, f64)>> {
    let mut pins = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (r, o) = item.split_once(':').ok_or(SimError::Config {
            line,
            msg: format!("event pin `{item}` is not route:offset"),
        })?;
        let route = r.trim().parse::<usize>().map_err(|_| SimError::Config {
            line,
            msg: format!("bad route index `{r}`"),
        })?;
        let offset = o.trim().parse::<f64>().map_err(|_| SimError::Config {
            line,
            msg: format!("bad offset `{o}`"),
        })?;
        pins.push((route, offset));
    }
    Ok(pins)
}

/// Apply `key = value` lines over `base`. `#` starts a comment; blank lines
/// are skipped; unknown keys abort with the offending key and line.
pub fn parse_config(text: &str, base: ScenarioConfig) -> Result<ScenarioConfig> {
    let mut cfg = base;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(SimError::Config {
            line: line_no,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let err = |msg: String| SimError::Config { line: line_no, msg };
        macro_rules! num {
            ($t:ty) => {
                value
                    .parse::<$t>()
                    .map_err(|_| err(format!("`{key}` expects a number, got `{value}`")))?
            };
        }
        match key {
            "sim.durationSec" => cfg.duration_sec = num!(f64),
            "sim.tickSec" => cfg.tick_sec = num!(f64),
            "sim.seed" => cfg.seed = num!(u64),
            "nodes.local" => cfg.n_local = num!(u32),
            "nodes.express" => cfg.n_express = num!(u32),
            "nodes.eventPins" => cfg.event_pins = parse_event_pins(value, line_no)?,
            "movement.localSpeedMps" => cfg.movement.local_speed_mps = num!(f64),
            "movement.expressSpeedMps" => cfg.movement.express_speed_mps = num!(f64),
            "movement.dwellSec" => cfg.movement.dwell_sec = num!(f64),
            "movement.terminusDwellSec" => cfg.movement.terminus_dwell_sec = num!(f64),
            "movement.stationSpacingM" => cfg.station_spacing_m = num!(f64),
            "movement.expressEveryK" => cfg.express_every_k = num!(usize),
            "radio.profile" => {
                cfg.radio = match value {
                    "bluetooth" => RadioChoice::Bluetooth,
                    "wifi" => RadioChoice::Wifi,
                    other => return Err(err(format!("unknown radio profile `{other}`"))),
                }
            }
            "radio.rangeM" => cfg.range_override_m = Some(num!(f64)),
            "radio.bandwidthBps" => cfg.bandwidth_override_bps = Some(num!(f64)),
            "radio.updateIntervalSec" => cfg.radio_update_interval_sec = num!(f64),
            "router" => {
                cfg.router = match value {
                    "epidemic" => RouterChoice::Epidemic,
                    "maxprop" => RouterChoice::MaxProp,
                    other => return Err(err(format!("unknown router `{other}`"))),
                }
            }
            "msg.sizeBytes" => cfg.msg_size_bytes = num!(u64),
            "msg.ttlSec" => cfg.ttl_sec = num!(f64),
            "msg.hopLimit" => cfg.hop_limit = num!(u32),
            "buffer.capacityBytes" => cfg.buffer_capacity_bytes = num!(u64),
            "traffic.firstAtSec" => cfg.traffic_first_at_sec = num!(f64),
            "traffic.intervalSec" => cfg.traffic_interval_sec = num!(f64),
            "traffic.countTarget" => cfg.traffic_count_target = num!(u32),
            "traffic.destMode" => {
                cfg.traffic_dest_mode = match value {
                    "random" => DestMode::Random,
                    "downline" => DestMode::Downline,
                    other => return Err(err(format!("unknown destMode `{other}`"))),
                }
            }
            "maxprop.thresholdHops" => cfg.maxprop_threshold_hops = num!(u32),
            _ => {
                return Err(SimError::UnknownKey {
                    key: key.to_string(),
                    line: line_no,
                });
            }
        }
    }
    Ok(cfg)
}

pub fn load_config(path: &Path, base: ScenarioConfig) -> Result<ScenarioConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| SimError::io(path.display().to_string(), e))?;
    parse_config(&text, base)
}
