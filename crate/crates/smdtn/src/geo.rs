//! Subway-lines ingestion: GeoJSON parsing, planar projection, and the
//! routable graph with synthesized (or supplied) stations.

use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::Path;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Current on-disk graph format version.
pub const GRAPH_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteKind {
    Local,
    Express,
}

/// A raw polyline straight out of the dataset, still in degrees.
#[derive(Clone, Debug, PartialEq)]
pub struct GeoRoute {
    pub route_id: String,
    pub kind: RouteKind,
    /// Ordered (lon, lat) vertices; at least 2, consecutive vertices distinct.
    pub vertices: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Station {
    /// Arc offset from the route start, meters.
    pub offset: f64,
    /// True if express trains stop here.
    pub express_stop: bool,
}

/// A projected route: planar vertices plus cumulative arc length and stations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyRoute {
    pub route_id: String,
    pub kind: RouteKind,
    /// Planar (x, y) vertices in meters.
    pub vertices: Vec<(f64, f64)>,
    /// Cumulative arc length per vertex; strictly increasing, starts at 0.
    pub cum_len: Vec<f64>,
    /// Stations ordered by offset; first at 0, last at total length.
    pub stations: Vec<Station>,
}

impl PolyRoute {
    pub fn total_len(&self) -> f64 {
        *self.cum_len.last().expect("route has vertices")
    }

    /// Planar position at an arc offset, linearly interpolated along segments.
    pub fn position_at(&self, offset: f64) -> (f64, f64) {
        let off = offset.clamp(0.0, self.total_len());
        // last index with cum_len[i] <= off
        let i = match self
            .cum_len
            .binary_search_by(|c| c.partial_cmp(&off).unwrap())
        {
            Ok(i) => i,
            Err(ins) => ins - 1,
        };
        if i + 1 >= self.vertices.len() {
            return self.vertices[i];
        }
        let seg = self.cum_len[i + 1] - self.cum_len[i];
        let t = if seg > 0.0 {
            (off - self.cum_len[i]) / seg
        } else {
            0.0
        };
        let (x0, y0) = self.vertices[i];
        let (x1, y1) = self.vertices[i + 1];
        (x0 + (x1 - x0) * t, y0 + (y1 - y0) * t)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RouteGraph {
    pub version: u32,
    /// (lon, lat) the planar frame is centered on.
    pub projection_origin: (f64, f64),
    /// (spacing m, express-every-k) the stations were synthesized with;
    /// absent when a route used explicit station offsets.
    #[serde(default)]
    pub station_params: Option<(f64, usize)>,
    pub routes: Vec<PolyRoute>,
}

impl RouteGraph {
    pub fn station_count(&self) -> usize {
        self.routes.iter().map(|r| r.stations.len()).sum()
    }

    /// Re-synthesize every route's stations at a new spacing / express
    /// pattern. Scenario configs use this to own station placement when
    /// running a previously ingested graph.
    pub fn resynthesize_stations(&mut self, spacing: f64, express_every_k: usize) {
        assert!(spacing > 0.0, "station spacing must be positive");
        for r in &mut self.routes {
            r.stations = synthesize_stations(r.total_len(), spacing, express_every_k);
        }
        self.station_params = Some((spacing, express_every_k));
    }

    /// Serialize to the private versioned text format. Deterministic: the
    /// same graph always yields the same bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut s = serde_json::to_string(self).expect("graph serializes");
        s.push('\n');
        s.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let g: RouteGraph =
            serde_json::from_slice(bytes).map_err(|e| SimError::GraphFormat(e.to_string()))?;
        if g.version != GRAPH_FORMAT_VERSION {
            return Err(SimError::GraphFormat(format!(
                "unsupported graph version {} (expected {})",
                g.version, GRAPH_FORMAT_VERSION
            )));
        }
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())
            .map_err(|e| SimError::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| SimError::io(path.display().to_string(), e))?;
        Self::from_bytes(&bytes)
    }
}

/// Equirectangular projection around `origin`: good to <0.1% at city scale.
pub fn project(point: (f64, f64), origin: (f64, f64)) -> (f64, f64) {
    let (lon, lat) = point;
    let (olon, olat) = origin;
    let x = EARTH_RADIUS_M * (lon - olon).to_radians() * olat.to_radians().cos();
    let y = EARTH_RADIUS_M * (lat - olat).to_radians();
    (x, y)
}

/// Inverse of [`project`].
pub fn unproject(xy: (f64, f64), origin: (f64, f64)) -> (f64, f64) {
    let (x, y) = xy;
    let (olon, olat) = origin;
    let lon = olon + (x / (EARTH_RADIUS_M * olat.to_radians().cos())).to_degrees();
    let lat = olat + (y / EARTH_RADIUS_M).to_degrees();
    (lon, lat)
}

fn byte_offset_of(input: &[u8], line: usize, column: usize) -> usize {
    // serde_json reports 1-based line/column
    let mut cur_line = 1usize;
    let mut offset = 0usize;
    for (i, b) in input.iter().enumerate() {
        if cur_line == line {
            return (i + column.saturating_sub(1)).min(input.len());
        }
        if *b == b'\n' {
            cur_line += 1;
            offset = i + 1;
        }
    }
    (offset + column.saturating_sub(1)).min(input.len())
}

fn coords_of(value: &Value, index: usize) -> Result<Vec<(f64, f64)>> {
    let arr = value.as_array().ok_or_else(|| SimError::Feature {
        index,
        msg: "coordinates are not an array".into(),
    })?;
    let mut out = Vec::with_capacity(arr.len());
    for pt in arr {
        let pair = pt
            .as_array()
            .filter(|p| p.len() >= 2)
            .ok_or_else(|| SimError::Feature {
                index,
                msg: "coordinate is not a [lon, lat] pair".into(),
            })?;
        let lon = pair[0].as_f64().ok_or_else(|| SimError::Feature {
            index,
            msg: "longitude is not a number".into(),
        })?;
        let lat = pair[1].as_f64().ok_or_else(|| SimError::Feature {
            index,
            msg: "latitude is not a number".into(),
        })?;
        out.push((lon, lat));
    }
    // drop consecutive duplicates so arc lengths stay strictly increasing
    out.dedup_by(|a, b| a == b);
    if out.len() < 2 {
        return Err(SimError::Feature {
            index,
            msg: "fewer than 2 distinct vertices".into(),
        });
    }
    Ok(out)
}

/// Parse a GeoJSON FeatureCollection of LineString / MultiLineString features
/// into raw routes. `name_key` is the property holding the route name
/// (default `name`); MultiLineString parts become `<name>-0`, `<name>-1`, ...
pub fn parse_lines(geojson: &[u8], name_key: &str) -> Result<Vec<GeoRoute>> {
    let doc: Value = serde_json::from_slice(geojson).map_err(|e| SimError::GeoParse {
        offset: byte_offset_of(geojson, e.line(), e.column()),
        msg: e.to_string(),
    })?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or(SimError::GeoParse {
            offset: 0,
            msg: "missing `features` array".into(),
        })?;

    let mut routes = Vec::new();
    for (index, feature) in features.iter().enumerate() {
        let props = feature.get("properties").unwrap_or(&Value::Null);
        let name = props
            .get(name_key)
            .and_then(Value::as_str)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| SimError::Feature {
                index,
                msg: format!("missing route-name property `{name_key}`"),
            })?
            .to_string();
        let kind = match props.get("kind").and_then(Value::as_str) {
            Some("express") => RouteKind::Express,
            _ => RouteKind::Local,
        };
        let geometry = feature
            .get("geometry")
            .filter(|g| !g.is_null())
            .ok_or_else(|| SimError::Feature {
                index,
                msg: "missing geometry".into(),
            })?;
        let gtype = geometry.get("type").and_then(Value::as_str).unwrap_or("");
        let coords = geometry
            .get("coordinates")
            .ok_or_else(|| SimError::Feature {
                index,
                msg: "missing coordinates".into(),
            })?;
        match gtype {
            "LineString" => {
                routes.push(GeoRoute {
                    route_id: name,
                    kind,
                    vertices: coords_of(coords, index)?,
                });
            }
            "MultiLineString" => {
                let parts = coords.as_array().ok_or_else(|| SimError::Feature {
                    index,
                    msg: "MultiLineString coordinates are not an array".into(),
                })?;
                for (p, part) in parts.iter().enumerate() {
                    routes.push(GeoRoute {
                        route_id: format!("{name}-{p}"),
                        kind,
                        vertices: coords_of(part, index)?,
                    });
                }
            }
            other => {
                return Err(SimError::Feature {
                    index,
                    msg: format!("unsupported geometry type `{other}`"),
                })
            }
        }
    }
    if routes.is_empty() {
        return Err(SimError::EmptyDataset);
    }
    Ok(routes)
}

/// Station synthesis: every `spacing` meters of arc plus both termini;
/// express stops at every k-th station index plus both termini.
fn synthesize_stations(total_len: f64, spacing: f64, express_every_k: usize) -> Vec<Station> {
    let mut offsets = Vec::new();
    let mut off = 0.0;
    let mut i = 0u32;
    while off < total_len {
        offsets.push(off);
        i += 1;
        off = spacing * f64::from(i);
    }
    offsets.push(total_len);
    offsets.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    mark_express(&offsets, express_every_k)
}

fn mark_express(offsets: &[f64], express_every_k: usize) -> Vec<Station> {
    let k = express_every_k.max(1);
    let last = offsets.len() - 1;
    offsets
        .iter()
        .enumerate()
        .map(|(i, &offset)| Station {
            offset,
            express_stop: i % k == 0 || i == 0 || i == last,
        })
        .collect()
}

/// Build the routable graph. Projection origin is the centroid of all
/// vertices; stations are synthesized at `station_spacing` unless an override
/// lists explicit offsets for a route (which must include both termini).
pub fn build_graph(
    routes: &[GeoRoute],
    station_spacing: f64,
    express_every_k: usize,
    stations_override: Option<&BTreeMap<String, Vec<f64>>>,
) -> Result<RouteGraph> {
    assert!(station_spacing > 0.0, "station spacing must be positive");
    if routes.is_empty() {
        return Err(SimError::EmptyDataset);
    }

    let mut n = 0usize;
    let (mut slon, mut slat) = (0.0f64, 0.0f64);
    for r in routes {
        for (lon, lat) in &r.vertices {
            slon += lon;
            slat += lat;
            n += 1;
        }
    }
    let origin = (slon / n as f64, slat / n as f64);

    let mut out = Vec::with_capacity(routes.len());
    for r in routes {
        let vertices: Vec<(f64, f64)> = r.vertices.iter().map(|&p| project(p, origin)).collect();
        let mut cum_len = Vec::with_capacity(vertices.len());
        let mut acc = 0.0;
        cum_len.push(0.0);
        for w in vertices.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            acc += ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
            cum_len.push(acc);
        }
        if acc < 1.0 {
            return Err(SimError::DegenerateRoute {
                route_id: r.route_id.clone(),
            });
        }
        let stations = match stations_override.and_then(|m| m.get(&r.route_id)) {
            Some(offsets) => {
                let mut offs = offsets.clone();
                offs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                if offs.first().copied() != Some(0.0)
                    || (offs.last().copied().unwrap_or(-1.0) - acc).abs() > 1e-6
                {
                    return Err(SimError::InvalidConfig(format!(
                        "station override for `{}` must include both termini (0 and {acc})",
                        r.route_id
                    )));
                }
                mark_express(&offs, express_every_k)
            }
            None => synthesize_stations(acc, station_spacing, express_every_k),
        };
        out.push(PolyRoute {
            route_id: r.route_id.clone(),
            kind: r.kind,
            vertices,
            cum_len,
            stations,
        });
    }
    Ok(RouteGraph {
        version: GRAPH_FORMAT_VERSION,
        projection_origin: origin,
        station_params: if stations_override.is_none() {
            Some((station_spacing, express_every_k))
        } else {
            None
        },
        routes: out,
    })
}
