//! External scenario file format: JSON with explicit unit tags.
//!
//! Dimensioned quantities are strings of the form `"<value> <unit>"`:
//! speeds accept `mph`, `mps` or `m/s`; lengths accept `m` or `ft`.
//! A bare number where a tagged quantity is expected is rejected — silent
//! unit assumptions are not allowed in a safety tool. Unknown fields anywhere
//! in the document are hard errors, so a misspelled monitor or weather key
//! cannot silently vanish.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::{
    Clouds, CommsLossWindow, DroneConfig, FuzzSpec, GpsConfig, InterventionCommand,
    InterventionEvent, Mission, MonitorSpec, Precipitation, RegionSpec, Scenario, SimParams,
    TimeOfDay, Weather, WindLayer, FT_TO_M, MPH_TO_MPS,
};
use crate::geo::{self, GeoPoint};
use crate::vehicle::Mode;

#[derive(Debug, Error)]
pub enum ParseError {
    /// Syntax error, unknown field, missing field, or malformed quantity.
    /// Carries the line/column of the offending token.
    #[error("scenario parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {0:?} (this build reads version \"1\")")]
    UnsupportedVersion(String),
}

// ---------------------------------------------------------------------------
// Unit-tagged quantities
// ---------------------------------------------------------------------------

/// A speed parsed from `"<value> <unit>"`, stored in m/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Speed(pub f64);

/// A length parsed from `"<value> <unit>"`, stored in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Length(pub f64);

fn split_quantity(s: &str) -> Result<(f64, &str), String> {
    let trimmed = s.trim();
    let mut parts = trimmed.split_whitespace();
    let value = parts
        .next()
        .ok_or_else(|| format!("empty quantity {s:?}"))?;
    let unit = parts.next().ok_or_else(|| {
        format!("missing unit tag in {s:?} (write e.g. \"23 mph\" or \"30 m\")")
    })?;
    if parts.next().is_some() {
        return Err(format!("malformed quantity {s:?}"));
    }
    let value: f64 = value
        .parse()
        .map_err(|_| format!("malformed numeric value in {s:?}"))?;
    Ok((value, unit))
}

impl<'de> Deserialize<'de> for Speed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        let (value, unit) = split_quantity(&raw).map_err(D::Error::custom)?;
        match unit {
            "mph" => Ok(Speed(value * MPH_TO_MPS)),
            "mps" | "m/s" => Ok(Speed(value)),
            other => Err(D::Error::custom(format!(
                "unknown speed unit {other:?} in {raw:?} (use mph, mps or m/s)"
            ))),
        }
    }
}

impl Serialize for Speed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{} mps", self.0))
    }
}

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        let (value, unit) = split_quantity(&raw).map_err(D::Error::custom)?;
        match unit {
            "ft" => Ok(Length(value * FT_TO_M)),
            "m" => Ok(Length(value)),
            other => Err(D::Error::custom(format!(
                "unknown length unit {other:?} in {raw:?} (use m or ft)"
            ))),
        }
    }
}

impl Serialize for Length {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{} m", self.0))
    }
}

impl fmt::Display for Speed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mps", self.0)
    }
}

// ---------------------------------------------------------------------------
// Document structure (what the file literally contains)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    format_version: String,
    name: String,
    origin: GeoPoint,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    regions: Vec<RegionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weather: Option<WeatherDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gps: Option<GpsDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    comms: Vec<CommsDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    interventions: Vec<InterventionDoc>,
    drones: Vec<DroneDoc>,
    missions: BTreeMap<String, MissionDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    monitors: Vec<MonitorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fuzz: Option<FuzzDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sim: Option<SimDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionDoc {
    id: String,
    vertices: Vec<GeoPoint>,
    alt_floor: Length,
    alt_ceiling: Length,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeatherDoc {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    layers: Vec<WindLayerDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    precipitation: Option<Precipitation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clouds: Option<Clouds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time_of_day: Option<TimeOfDay>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindLayerDoc {
    alt_lower: Length,
    alt_upper: Length,
    speed: Speed,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gust: Option<Speed>,
    direction_deg: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GpsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    satellites: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    deprivation_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    dead_spot_region_ids: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommsDoc {
    drone_ids: Vec<String>,
    start_s: f64,
    duration_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterventionDoc {
    t_s: f64,
    drone_id: String,
    command: InterventionCommand,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DroneDoc {
    id: String,
    home: GeoPoint,
    max_airspeed: Speed,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cruise_speed: Option<Speed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    climb_rate: Option<Speed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    descent_rate: Option<Speed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    accept_radius: Option<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rtl_alt: Option<Length>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum MissionDoc {
    Waypoints {
        waypoints: Vec<GeoPoint>,
    },
    Circle {
        center: GeoPoint,
        radius: Length,
        alt: Length,
        speed: Speed,
        #[serde(default = "one")]
        laps: u32,
    },
    Square {
        center: GeoPoint,
        side: Length,
        alt: Length,
        speed: Speed,
    },
}

fn one() -> u32 {
    1
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum MonitorDoc {
    MinSeparation {
        min: Length,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode_filter: Option<Mode>,
    },
    NoFlyZone {
        region_ids: Vec<String>,
    },
    SafeLanding {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        allowed_region_ids: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        forbidden_region_ids: Option<Vec<String>>,
    },
    DriftBound {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        absolute: Option<Length>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fraction: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        wind_gate: Option<Speed>,
    },
    WaypointReach {
        tolerance: Length,
    },
    DurationBound {
        baseline_s: f64,
        factor: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FuzzDoc {
    param_path: String,
    max_value: f64,
    variants: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dt_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rtl_comms_timeout_s: Option<f64>,
}

// ---------------------------------------------------------------------------
// Parse / serialize
// ---------------------------------------------------------------------------

/// Parses and normalizes a scenario document. Structural problems (syntax,
/// unknown fields, missing unit tags, unsupported version) are errors here;
/// semantic problems (range and cross-reference violations) are reported by
/// [`super::validate`].
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let doc: ScenarioDoc = serde_json::from_str(text)?;
    if doc.format_version != "1" {
        return Err(ParseError::UnsupportedVersion(doc.format_version));
    }
    let origin = doc.origin;

    let regions = doc
        .regions
        .into_iter()
        .map(|r| {
            let polygon_enu = r
                .vertices
                .iter()
                .map(|v| geo::to_enu(origin, GeoPoint::new(v.lat_deg, v.lon_deg, 0.0)))
                .collect::<Result<Vec<_>, _>>()
                .unwrap_or_default();
            RegionSpec {
                id: r.id,
                vertices: r.vertices,
                alt_floor_m: r.alt_floor.0,
                alt_ceiling_m: r.alt_ceiling.0,
                polygon_enu,
            }
        })
        .collect();

    let weather = match doc.weather {
        None => Weather::default(),
        Some(w) => Weather {
            layers: w
                .layers
                .into_iter()
                .map(|l| WindLayer {
                    alt_lower_m: l.alt_lower.0,
                    alt_upper_m: l.alt_upper.0,
                    speed_mps: l.speed.0,
                    gust_mps: l.gust.map_or(0.0, |g| g.0),
                    direction_deg: l.direction_deg,
                })
                .collect(),
            precipitation: w.precipitation.unwrap_or(Precipitation::None),
            clouds: w.clouds.unwrap_or(Clouds::None),
            time_of_day: w.time_of_day.unwrap_or(TimeOfDay::Midday),
        },
    };

    let gps = match doc.gps {
        None => GpsConfig::default(),
        Some(g) => GpsConfig {
            satellites: g.satellites,
            deprivation_pct: g.deprivation_pct,
            dead_spot_region_ids: g.dead_spot_region_ids,
        },
    };

    let comms = doc
        .comms
        .into_iter()
        .map(|c| CommsLossWindow {
            drone_ids: c.drone_ids,
            start_s: c.start_s,
            duration_s: c.duration_s,
        })
        .collect();

    let interventions = doc
        .interventions
        .into_iter()
        .map(|i| InterventionEvent {
            t_s: i.t_s,
            drone_id: i.drone_id,
            command: i.command,
        })
        .collect();

    let drones = doc
        .drones
        .into_iter()
        .map(|d| DroneConfig {
            id: d.id,
            home: d.home,
            max_airspeed_mps: d.max_airspeed.0,
            cruise_speed_mps: d.cruise_speed.map_or(d.max_airspeed.0, |s| s.0),
            climb_rate_mps: d.climb_rate.map_or(2.0, |s| s.0),
            descent_rate_mps: d.descent_rate.map_or(1.0, |s| s.0),
            accept_radius_m: d.accept_radius.map_or(1.0, |l| l.0),
            rtl_alt_m: d.rtl_alt.map_or(30.0, |l| l.0),
        })
        .collect();

    let missions = doc
        .missions
        .into_iter()
        .map(|(id, m)| {
            let mission = match m {
                MissionDoc::Waypoints { waypoints } => Mission::Waypoints { waypoints },
                MissionDoc::Circle {
                    center,
                    radius,
                    alt,
                    speed,
                    laps,
                } => Mission::Circle {
                    center,
                    radius_m: radius.0,
                    alt_m: alt.0,
                    speed_mps: speed.0,
                    laps,
                },
                MissionDoc::Square {
                    center,
                    side,
                    alt,
                    speed,
                } => Mission::Square {
                    center,
                    side_m: side.0,
                    alt_m: alt.0,
                    speed_mps: speed.0,
                },
            };
            (id, mission)
        })
        .collect();

    let monitors = doc
        .monitors
        .into_iter()
        .map(|m| match m {
            MonitorDoc::MinSeparation { min, mode_filter } => MonitorSpec::MinSeparation {
                min_m: min.0,
                mode_filter,
            },
            MonitorDoc::NoFlyZone { region_ids } => MonitorSpec::NoFlyZone { region_ids },
            MonitorDoc::SafeLanding {
                allowed_region_ids,
                forbidden_region_ids,
            } => MonitorSpec::SafeLanding {
                allowed_region_ids,
                forbidden_region_ids,
            },
            MonitorDoc::DriftBound {
                absolute,
                fraction,
                wind_gate,
            } => MonitorSpec::DriftBound {
                absolute_m: absolute.map(|l| l.0),
                fraction,
                wind_gate_mps: wind_gate.map(|s| s.0),
            },
            MonitorDoc::WaypointReach { tolerance } => MonitorSpec::WaypointReach {
                tolerance_m: tolerance.0,
            },
            MonitorDoc::DurationBound { baseline_s, factor } => {
                MonitorSpec::DurationBound { baseline_s, factor }
            }
        })
        .collect();

    let fuzz = doc.fuzz.map(|f| FuzzSpec {
        param_path: f.param_path,
        max_value: f.max_value,
        variants: f.variants,
    });

    let sim = match doc.sim {
        None => SimParams::default(),
        Some(s) => {
            let d = SimParams::default();
            SimParams {
                dt_s: s.dt_s.unwrap_or(d.dt_s),
                max_duration_s: s.max_duration_s.unwrap_or(d.max_duration_s),
                seed: s.seed.unwrap_or(d.seed),
                rtl_comms_timeout_s: s.rtl_comms_timeout_s.unwrap_or(d.rtl_comms_timeout_s),
            }
        }
    };

    Ok(Scenario {
        format_version: doc.format_version,
        name: doc.name,
        origin,
        regions,
        weather,
        gps,
        comms,
        interventions,
        drones,
        missions,
        monitors,
        fuzz,
        sim,
    })
}

/// Serializes a normalized scenario back to the external format. All
/// quantities are written in SI units with explicit tags, so a re-parse of
/// the output yields an identical `Scenario` value.
pub fn serialize_scenario(s: &Scenario) -> String {
    let doc = ScenarioDoc {
        format_version: s.format_version.clone(),
        name: s.name.clone(),
        origin: s.origin,
        regions: s
            .regions
            .iter()
            .map(|r| RegionDoc {
                id: r.id.clone(),
                vertices: r.vertices.clone(),
                alt_floor: Length(r.alt_floor_m),
                alt_ceiling: Length(r.alt_ceiling_m),
            })
            .collect(),
        weather: Some(WeatherDoc {
            layers: s
                .weather
                .layers
                .iter()
                .map(|l| WindLayerDoc {
                    alt_lower: Length(l.alt_lower_m),
                    alt_upper: Length(l.alt_upper_m),
                    speed: Speed(l.speed_mps),
                    gust: Some(Speed(l.gust_mps)),
                    direction_deg: l.direction_deg,
                })
                .collect(),
            precipitation: Some(s.weather.precipitation),
            clouds: Some(s.weather.clouds),
            time_of_day: Some(s.weather.time_of_day),
        }),
        gps: Some(GpsDoc {
            satellites: s.gps.satellites,
            deprivation_pct: s.gps.deprivation_pct,
            dead_spot_region_ids: s.gps.dead_spot_region_ids.clone(),
        }),
        comms: s
            .comms
            .iter()
            .map(|c| CommsDoc {
                drone_ids: c.drone_ids.clone(),
                start_s: c.start_s,
                duration_s: c.duration_s,
            })
            .collect(),
        interventions: s
            .interventions
            .iter()
            .map(|i| InterventionDoc {
                t_s: i.t_s,
                drone_id: i.drone_id.clone(),
                command: i.command,
            })
            .collect(),
        drones: s
            .drones
            .iter()
            .map(|d| DroneDoc {
                id: d.id.clone(),
                home: d.home,
                max_airspeed: Speed(d.max_airspeed_mps),
                cruise_speed: Some(Speed(d.cruise_speed_mps)),
                climb_rate: Some(Speed(d.climb_rate_mps)),
                descent_rate: Some(Speed(d.descent_rate_mps)),
                accept_radius: Some(Length(d.accept_radius_m)),
                rtl_alt: Some(Length(d.rtl_alt_m)),
            })
            .collect(),
        missions: s
            .missions
            .iter()
            .map(|(id, m)| {
                let doc = match m {
                    Mission::Waypoints { waypoints } => MissionDoc::Waypoints {
                        waypoints: waypoints.clone(),
                    },
                    Mission::Circle {
                        center,
                        radius_m,
                        alt_m,
                        speed_mps,
                        laps,
                    } => MissionDoc::Circle {
                        center: *center,
                        radius: Length(*radius_m),
                        alt: Length(*alt_m),
                        speed: Speed(*speed_mps),
                        laps: *laps,
                    },
                    Mission::Square {
                        center,
                        side_m,
                        alt_m,
                        speed_mps,
                    } => MissionDoc::Square {
                        center: *center,
                        side: Length(*side_m),
                        alt: Length(*alt_m),
                        speed: Speed(*speed_mps),
                    },
                };
                (id.clone(), doc)
            })
            .collect(),
        monitors: s
            .monitors
            .iter()
            .map(|m| match m {
                MonitorSpec::MinSeparation { min_m, mode_filter } => MonitorDoc::MinSeparation {
                    min: Length(*min_m),
                    mode_filter: *mode_filter,
                },
                MonitorSpec::NoFlyZone { region_ids } => MonitorDoc::NoFlyZone {
                    region_ids: region_ids.clone(),
                },
                MonitorSpec::SafeLanding {
                    allowed_region_ids,
                    forbidden_region_ids,
                } => MonitorDoc::SafeLanding {
                    allowed_region_ids: allowed_region_ids.clone(),
                    forbidden_region_ids: forbidden_region_ids.clone(),
                },
                MonitorSpec::DriftBound {
                    absolute_m,
                    fraction,
                    wind_gate_mps,
                } => MonitorDoc::DriftBound {
                    absolute: absolute_m.map(Length),
                    fraction: *fraction,
                    wind_gate: wind_gate_mps.map(Speed),
                },
                MonitorSpec::WaypointReach { tolerance_m } => MonitorDoc::WaypointReach {
                    tolerance: Length(*tolerance_m),
                },
                MonitorSpec::DurationBound { baseline_s, factor } => MonitorDoc::DurationBound {
                    baseline_s: *baseline_s,
                    factor: *factor,
                },
            })
            .collect(),
        fuzz: s.fuzz.as_ref().map(|f| FuzzDoc {
            param_path: f.param_path.clone(),
            max_value: f.max_value,
            variants: f.variants,
        }),
        sim: Some(SimDoc {
            dt_s: Some(s.sim.dt_s),
            max_duration_s: Some(s.sim.max_duration_s),
            seed: Some(s.sim.seed),
            rtl_comms_timeout_s: Some(s.sim.rtl_comms_timeout_s),
        }),
    };
    serde_json::to_string_pretty(&doc).expect("scenario serialization cannot fail")
}
