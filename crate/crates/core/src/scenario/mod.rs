//! Declarative scenario model: the complete description of one test case.
//!
//! A scenario is written as a JSON document (see `docs/FORMAT.md` for the
//! field-by-field reference), parsed into the normalized form in this module,
//! and validated before anything is simulated. After parsing, every quantity
//! is in SI units: meters, meters per second, seconds. Dimensioned fields in
//! the file carry explicit unit tags (`"23 mph"`, `"400 ft"`) and are
//! converted on parse (mph → m/s via 0.44704, ft → m via 0.3048).

mod format;
mod path;
mod validate;

pub use format::{parse_scenario, serialize_scenario, ParseError};
pub use path::{resolve_param_path, ParamHandle, PathError};
pub use validate::{is_runnable, validate, DiagCode, Diagnostic, Severity};

use std::collections::BTreeMap;

use crate::geo::{self, EnuPoint, GeoPoint};
use crate::vehicle::Mode;

pub const MPH_TO_MPS: f64 = 0.44704;
pub const FT_TO_M: f64 = 0.3048;

/// A wind band: stable speed plus gust amplitude over an AGL altitude range.
/// `direction_deg` is the meteorological convention — the bearing the wind
/// blows FROM, clockwise from north. A layer with `direction_deg: 90` (from
/// the east) pushes vehicles westward.
#[derive(Debug, Clone, PartialEq)]
pub struct WindLayer {
    pub alt_lower_m: f64,
    pub alt_upper_m: f64,
    pub speed_mps: f64,
    pub gust_mps: f64,
    pub direction_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precipitation {
    None,
    Light,
    Moderate,
    Heavy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clouds {
    None,
    Light,
    Moderate,
    Heavy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeOfDay {
    Dawn,
    Morning,
    Midday,
    Afternoon,
    Dusk,
    Night,
}

/// Wind layers plus context metadata. Precipitation, clouds and time of day
/// parse, round-trip and are echoed into reports, but have no physical effect
/// on the simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Weather {
    pub layers: Vec<WindLayer>,
    pub precipitation: Precipitation,
    pub clouds: Clouds,
    pub time_of_day: TimeOfDay,
}

impl Default for Weather {
    fn default() -> Self {
        Self {
            layers: Vec::new(),
            precipitation: Precipitation::None,
            clouds: Clouds::None,
            time_of_day: TimeOfDay::Midday,
        }
    }
}

/// GPS accuracy model configuration. Exactly one of `satellites` /
/// `deprivation_pct` must be given; they are alternative parameterizations
/// of the same horizontal noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct GpsConfig {
    pub satellites: Option<u32>,
    pub deprivation_pct: Option<f64>,
    /// Regions in which no fix is available; the vehicle dead-reckons inside.
    pub dead_spot_region_ids: Vec<String>,
}

impl Default for GpsConfig {
    fn default() -> Self {
        Self {
            satellites: Some(15),
            deprivation_pct: None,
            dead_spot_region_ids: Vec::new(),
        }
    }
}

/// A window of lost command link for the listed drones.
#[derive(Debug, Clone, PartialEq)]
pub struct CommsLossWindow {
    pub drone_ids: Vec<String>,
    pub start_s: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum InterventionCommand {
    #[serde(rename = "RTL")]
    Rtl,
    #[serde(rename = "LAND")]
    Land,
    #[serde(rename = "LOITER")]
    Loiter,
    #[serde(rename = "RESUME")]
    Resume,
}

/// A scripted operator command issued to one drone at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionEvent {
    pub t_s: f64,
    pub drone_id: String,
    pub command: InterventionCommand,
}

/// Per-drone performance and geometry configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DroneConfig {
    pub id: String,
    pub home: GeoPoint,
    pub max_airspeed_mps: f64,
    pub cruise_speed_mps: f64,
    pub climb_rate_mps: f64,
    pub descent_rate_mps: f64,
    pub accept_radius_m: f64,
    pub rtl_alt_m: f64,
}

/// Flight plan for one drone.
#[derive(Debug, Clone, PartialEq)]
pub enum Mission {
    Waypoints {
        waypoints: Vec<GeoPoint>,
    },
    Circle {
        center: GeoPoint,
        radius_m: f64,
        alt_m: f64,
        speed_mps: f64,
        laps: u32,
    },
    Square {
        center: GeoPoint,
        side_m: f64,
        alt_m: f64,
        speed_mps: f64,
    },
}

impl Mission {
    /// Commanded speed for the mission legs, when the mission specifies one.
    pub fn speed_mps(&self) -> Option<f64> {
        match self {
            Mission::Waypoints { .. } => None,
            Mission::Circle { speed_mps, .. } | Mission::Square { speed_mps, .. } => {
                Some(*speed_mps)
            }
        }
    }
}

/// A checkable safety property.
#[derive(Debug, Clone, PartialEq)]
pub enum MonitorSpec {
    /// Minimum lateral separation between every airborne pair.
    MinSeparation {
        min_m: f64,
        /// When set, the check applies only to ticks where both drones are
        /// in this mode.
        mode_filter: Option<Mode>,
    },
    /// No airborne drone may be inside any of the listed regions.
    NoFlyZone { region_ids: Vec<String> },
    /// Landing position constraint: exactly one of the two sets is given.
    SafeLanding {
        allowed_region_ids: Option<Vec<String>>,
        forbidden_region_ids: Option<Vec<String>>,
    },
    /// Bound on deviation from the planned path. The fractional form is only
    /// meaningful for circle missions (relative to the commanded radius).
    DriftBound {
        absolute_m: Option<f64>,
        fraction: Option<f64>,
        /// When set, ticks are checked only while the sampled wind speed at
        /// the drone is at least this value.
        wind_gate_mps: Option<f64>,
    },
    /// Every planned waypoint must be approached within
    /// `tolerance + accept_radius` meters at some point of the flight.
    WaypointReach { tolerance_m: f64 },
    /// Mission must complete within `baseline_s * factor` seconds.
    DurationBound { baseline_s: f64, factor: f64 },
}

impl MonitorSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            MonitorSpec::MinSeparation { .. } => "min_separation",
            MonitorSpec::NoFlyZone { .. } => "no_fly_zone",
            MonitorSpec::SafeLanding { .. } => "safe_landing",
            MonitorSpec::DriftBound { .. } => "drift_bound",
            MonitorSpec::WaypointReach { .. } => "waypoint_reach",
            MonitorSpec::DurationBound { .. } => "duration_bound",
        }
    }
}

/// One fuzzed parameter: a dotted path to a numeric scenario field, the
/// termination bound in that field's normalized unit, and the number of
/// fuzzed copies to generate.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzSpec {
    pub param_path: String,
    pub max_value: f64,
    pub variants: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub dt_s: f64,
    pub max_duration_s: f64,
    pub seed: u64,
    pub rtl_comms_timeout_s: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt_s: 0.1,
            max_duration_s: 600.0,
            seed: 0,
            rtl_comms_timeout_s: 5.0,
        }
    }
}

/// A named region as parsed: geographic outline plus the ENU polygon derived
/// from it at parse time. The geographic vertices are kept so serialization
/// round-trips exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub id: String,
    pub vertices: Vec<GeoPoint>,
    pub alt_floor_m: f64,
    pub alt_ceiling_m: f64,
    /// Derived at parse; empty when the origin was too degenerate to convert
    /// (validation rejects such scenarios before the polygon is used).
    pub polygon_enu: Vec<EnuPoint>,
}

impl RegionSpec {
    pub fn volume(&self) -> geo::Region {
        geo::Region {
            id: self.id.clone(),
            polygon: self.polygon_enu.clone(),
            alt_floor_m: self.alt_floor_m,
            alt_ceiling_m: self.alt_ceiling_m,
        }
    }
}

/// A complete declarative test case.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub format_version: String,
    pub name: String,
    pub origin: GeoPoint,
    pub regions: Vec<RegionSpec>,
    pub weather: Weather,
    pub gps: GpsConfig,
    pub comms: Vec<CommsLossWindow>,
    pub interventions: Vec<InterventionEvent>,
    pub drones: Vec<DroneConfig>,
    pub missions: BTreeMap<String, Mission>,
    pub monitors: Vec<MonitorSpec>,
    pub fuzz: Option<FuzzSpec>,
    pub sim: SimParams,
}

impl Scenario {
    pub fn drone(&self, id: &str) -> Option<&DroneConfig> {
        self.drones.iter().find(|d| d.id == id)
    }

    pub fn region(&self, id: &str) -> Option<&RegionSpec> {
        self.regions.iter().find(|r| r.id == id)
    }

    /// Region volumes for the given ids, in the listed order.
    pub fn region_volumes(&self, ids: &[String]) -> Vec<geo::Region> {
        ids.iter()
            .filter_map(|id| self.region(id).map(RegionSpec::volume))
            .collect()
    }
}
