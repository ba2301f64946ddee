//! Dotted-path resolution into a scenario's numeric fields.
//!
//! Paths address exactly one `f64` field, e.g. `weather.layers[0].speed` or
//! `missions.D1.radius`. The fuzzer uses the returned handle to read the
//! current value and to substitute values into scenario copies. Values are
//! always in the field's normalized unit (m, m/s, s, degrees).

use thiserror::Error;

use super::{Mission, Scenario};

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("PATH_NOT_FOUND: {0:?} does not resolve to a scenario field")]
    NotFound(String),
    #[error("PATH_NOT_NUMERIC: {0:?} is not a fuzzable numeric field")]
    NotNumeric(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Target {
    WindSpeed(usize),
    WindGust(usize),
    WindDirection(usize),
    WindAltLower(usize),
    WindAltUpper(usize),
    GpsDeprivation,
    CommsStart(usize),
    CommsDuration(usize),
    InterventionTime(usize),
    DroneMaxAirspeed(usize),
    DroneCruise(usize),
    DroneClimb(usize),
    DroneDescent(usize),
    DroneAcceptRadius(usize),
    DroneRtlAlt(usize),
    MissionRadius(String),
    MissionAlt(String),
    MissionSpeed(String),
    MissionSide(String),
    SimDt,
    SimMaxDuration,
    SimRtlTimeout,
}

/// Read/write access to one numeric scenario field.
///
/// A handle stays valid for the scenario it was resolved against and for
/// structurally identical copies of it (which is how the fuzzer uses it).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamHandle {
    path: String,
    target: Target,
}

impl ParamHandle {
    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn read(&self, s: &Scenario) -> f64 {
        match &self.target {
            Target::WindSpeed(i) => s.weather.layers[*i].speed_mps,
            Target::WindGust(i) => s.weather.layers[*i].gust_mps,
            Target::WindDirection(i) => s.weather.layers[*i].direction_deg,
            Target::WindAltLower(i) => s.weather.layers[*i].alt_lower_m,
            Target::WindAltUpper(i) => s.weather.layers[*i].alt_upper_m,
            Target::GpsDeprivation => s.gps.deprivation_pct.unwrap_or(0.0),
            Target::CommsStart(i) => s.comms[*i].start_s,
            Target::CommsDuration(i) => s.comms[*i].duration_s,
            Target::InterventionTime(i) => s.interventions[*i].t_s,
            Target::DroneMaxAirspeed(i) => s.drones[*i].max_airspeed_mps,
            Target::DroneCruise(i) => s.drones[*i].cruise_speed_mps,
            Target::DroneClimb(i) => s.drones[*i].climb_rate_mps,
            Target::DroneDescent(i) => s.drones[*i].descent_rate_mps,
            Target::DroneAcceptRadius(i) => s.drones[*i].accept_radius_m,
            Target::DroneRtlAlt(i) => s.drones[*i].rtl_alt_m,
            Target::MissionRadius(id) => match &s.missions[id] {
                Mission::Circle { radius_m, .. } => *radius_m,
                _ => unreachable!("resolution checked the mission shape"),
            },
            Target::MissionAlt(id) => match &s.missions[id] {
                Mission::Circle { alt_m, .. } | Mission::Square { alt_m, .. } => *alt_m,
                _ => unreachable!("resolution checked the mission shape"),
            },
            Target::MissionSpeed(id) => match &s.missions[id] {
                Mission::Circle { speed_mps, .. } | Mission::Square { speed_mps, .. } => {
                    *speed_mps
                }
                _ => unreachable!("resolution checked the mission shape"),
            },
            Target::MissionSide(id) => match &s.missions[id] {
                Mission::Square { side_m, .. } => *side_m,
                _ => unreachable!("resolution checked the mission shape"),
            },
            Target::SimDt => s.sim.dt_s,
            Target::SimMaxDuration => s.sim.max_duration_s,
            Target::SimRtlTimeout => s.sim.rtl_comms_timeout_s,
        }
    }

    pub fn write(&self, s: &mut Scenario, value: f64) {
        match &self.target {
            Target::WindSpeed(i) => s.weather.layers[*i].speed_mps = value,
            Target::WindGust(i) => s.weather.layers[*i].gust_mps = value,
            Target::WindDirection(i) => s.weather.layers[*i].direction_deg = value,
            Target::WindAltLower(i) => s.weather.layers[*i].alt_lower_m = value,
            Target::WindAltUpper(i) => s.weather.layers[*i].alt_upper_m = value,
            Target::GpsDeprivation => s.gps.deprivation_pct = Some(value),
            Target::CommsStart(i) => s.comms[*i].start_s = value,
            Target::CommsDuration(i) => s.comms[*i].duration_s = value,
            Target::InterventionTime(i) => s.interventions[*i].t_s = value,
            Target::DroneMaxAirspeed(i) => s.drones[*i].max_airspeed_mps = value,
            Target::DroneCruise(i) => s.drones[*i].cruise_speed_mps = value,
            Target::DroneClimb(i) => s.drones[*i].climb_rate_mps = value,
            Target::DroneDescent(i) => s.drones[*i].descent_rate_mps = value,
            Target::DroneAcceptRadius(i) => s.drones[*i].accept_radius_m = value,
            Target::DroneRtlAlt(i) => s.drones[*i].rtl_alt_m = value,
            Target::MissionRadius(id) => {
                if let Some(Mission::Circle { radius_m, .. }) = s.missions.get_mut(id) {
                    *radius_m = value;
                }
            }
            Target::MissionAlt(id) => match s.missions.get_mut(id) {
                Some(Mission::Circle { alt_m, .. }) | Some(Mission::Square { alt_m, .. }) => {
                    *alt_m = value;
                }
                _ => {}
            },
            Target::MissionSpeed(id) => match s.missions.get_mut(id) {
                Some(Mission::Circle { speed_mps, .. })
                | Some(Mission::Square { speed_mps, .. }) => *speed_mps = value,
                _ => {}
            },
            Target::MissionSide(id) => {
                if let Some(Mission::Square { side_m, .. }) = s.missions.get_mut(id) {
                    *side_m = value;
                }
            }
            Target::SimDt => s.sim.dt_s = value,
            Target::SimMaxDuration => s.sim.max_duration_s = value,
            Target::SimRtlTimeout => s.sim.rtl_comms_timeout_s = value,
        }
    }
}

fn split_index(segment: &str) -> Option<(&str, Option<usize>)> {
    match segment.find('[') {
        None => Some((segment, None)),
        Some(open) => {
            let close = segment.rfind(']')?;
            if close != segment.len() - 1 || close <= open {
                return None;
            }
            let idx: usize = segment[open + 1..close].parse().ok()?;
            Some((&segment[..open], Some(idx)))
        }
    }
}

/// Resolves a dotted path to a numeric-field handle on `s`.
pub fn resolve_param_path(s: &Scenario, path: &str) -> Result<ParamHandle, PathError> {
    let not_found = || PathError::NotFound(path.to_string());
    let not_numeric = || PathError::NotNumeric(path.to_string());
    let segments: Vec<&str> = path.split('.').collect();

    let parsed: Vec<(&str, Option<usize>)> = segments
        .iter()
        .map(|seg| split_index(seg))
        .collect::<Option<_>>()
        .ok_or_else(not_found)?;

    let target = match parsed.as_slice() {
        [("weather", None), ("layers", Some(i)), (field, None)] => {
            if *i >= s.weather.layers.len() {
                return Err(not_found());
            }
            match *field {
                "speed" => Target::WindSpeed(*i),
                "gust" => Target::WindGust(*i),
                "direction_deg" => Target::WindDirection(*i),
                "alt_lower" => Target::WindAltLower(*i),
                "alt_upper" => Target::WindAltUpper(*i),
                _ => return Err(not_found()),
            }
        }
        [("gps", None), ("deprivation_pct", None)] => {
            if s.gps.deprivation_pct.is_none() {
                return Err(not_found());
            }
            Target::GpsDeprivation
        }
        [("gps", None), ("satellites", None)] => return Err(not_numeric()),
        [("comms", Some(i)), (field, None)] => {
            if *i >= s.comms.len() {
                return Err(not_found());
            }
            match *field {
                "start_s" => Target::CommsStart(*i),
                "duration_s" => Target::CommsDuration(*i),
                _ => return Err(not_found()),
            }
        }
        [("interventions", Some(i)), ("t_s", None)] => {
            if *i >= s.interventions.len() {
                return Err(not_found());
            }
            Target::InterventionTime(*i)
        }
        [("drones", Some(i)), (field, None)] => {
            if *i >= s.drones.len() {
                return Err(not_found());
            }
            match *field {
                "max_airspeed" => Target::DroneMaxAirspeed(*i),
                "cruise_speed" => Target::DroneCruise(*i),
                "climb_rate" => Target::DroneClimb(*i),
                "descent_rate" => Target::DroneDescent(*i),
                "accept_radius" => Target::DroneAcceptRadius(*i),
                "rtl_alt" => Target::DroneRtlAlt(*i),
                "id" | "home" => return Err(not_numeric()),
                _ => return Err(not_found()),
            }
        }
        [("missions", None), (id, None), (field, None)] => {
            let mission = s.missions.get(*id).ok_or_else(not_found)?;
            match (*field, mission) {
                ("radius", Mission::Circle { .. }) => Target::MissionRadius(id.to_string()),
                ("side", Mission::Square { .. }) => Target::MissionSide(id.to_string()),
                ("alt", Mission::Circle { .. }) | ("alt", Mission::Square { .. }) => {
                    Target::MissionAlt(id.to_string())
                }
                ("speed", Mission::Circle { .. }) | ("speed", Mission::Square { .. }) => {
                    Target::MissionSpeed(id.to_string())
                }
                ("type", _) | ("waypoints", _) | ("center", _) => return Err(not_numeric()),
                _ => return Err(not_found()),
            }
        }
        [("sim", None), (field, None)] => match *field {
            "dt_s" => Target::SimDt,
            "max_duration_s" => Target::SimMaxDuration,
            "rtl_comms_timeout_s" => Target::SimRtlTimeout,
            "seed" => return Err(not_numeric()),
            _ => return Err(not_found()),
        },
        [("name", None)] | [("format_version", None)] => return Err(not_numeric()),
        _ => return Err(not_found()),
    };

    Ok(ParamHandle {
        path: path.to_string(),
        target,
    })
}
