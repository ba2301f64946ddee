//! Scenario validation: semantic checks over a structurally parsed scenario.
//!
//! Validation never fails — the diagnostics are the output. An empty list
//! means every invariant holds and every cross-reference resolves. The walk
//! order is fixed, so the same scenario always yields the same diagnostics
//! in the same order.

use std::collections::BTreeSet;
use std::fmt;

use super::path::{resolve_param_path, PathError};
use super::{Mission, MonitorSpec, Scenario};
use crate::geo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum DiagCode {
    OriginInvalid,
    GeoRange,
    RegionDupId,
    RegionTooFewVertices,
    RegionSelfIntersecting,
    RegionAltOrder,
    WindBandOrder,
    WindNegativeSpeed,
    WindDirectionRange,
    OverlappingWindLayers,
    GpsModeConflict,
    GpsDeprivationRange,
    UnknownRegionRef,
    UnknownDroneRef,
    CommsNegativeStart,
    CommsNonpositiveDuration,
    InterventionNegativeTime,
    DroneDupId,
    DroneSpeedOrder,
    DroneNonpositiveParam,
    MissionMissing,
    MissionEmptyWaypoints,
    MissionNonpositiveParam,
    MissionZeroLaps,
    MonitorNonpositiveThreshold,
    MonitorSafeLandingForm,
    MonitorDriftForm,
    MonitorDriftFractionRange,
    MonitorFactorRange,
    FractionOnWaypointMission,
    FuzzMaxBelowCurrent,
    FuzzZeroVariants,
    FuzzLadderBelowCurrent,
    FuzzPathNotFound,
    FuzzPathNotNumeric,
    SimDtRange,
    SimNonpositiveDuration,
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Stable machine-readable names, SCREAMING_SNAKE_CASE.
        let s = match self {
            DiagCode::OriginInvalid => "ORIGIN_INVALID",
            DiagCode::GeoRange => "GEO_RANGE",
            DiagCode::RegionDupId => "REGION_DUP_ID",
            DiagCode::RegionTooFewVertices => "REGION_TOO_FEW_VERTICES",
            DiagCode::RegionSelfIntersecting => "REGION_SELF_INTERSECTING",
            DiagCode::RegionAltOrder => "REGION_ALT_ORDER",
            DiagCode::WindBandOrder => "WIND_BAND_ORDER",
            DiagCode::WindNegativeSpeed => "WIND_NEGATIVE_SPEED",
            DiagCode::WindDirectionRange => "WIND_DIRECTION_RANGE",
            DiagCode::OverlappingWindLayers => "OVERLAPPING_WIND_LAYERS",
            DiagCode::GpsModeConflict => "GPS_MODE_CONFLICT",
            DiagCode::GpsDeprivationRange => "GPS_DEPRIVATION_RANGE",
            DiagCode::UnknownRegionRef => "UNKNOWN_REGION_REF",
            DiagCode::UnknownDroneRef => "UNKNOWN_DRONE_REF",
            DiagCode::CommsNegativeStart => "COMMS_NEGATIVE_START",
            DiagCode::CommsNonpositiveDuration => "COMMS_NONPOSITIVE_DURATION",
            DiagCode::InterventionNegativeTime => "INTERVENTION_NEGATIVE_TIME",
            DiagCode::DroneDupId => "DRONE_DUP_ID",
            DiagCode::DroneSpeedOrder => "DRONE_SPEED_ORDER",
            DiagCode::DroneNonpositiveParam => "DRONE_NONPOSITIVE_PARAM",
            DiagCode::MissionMissing => "MISSION_MISSING",
            DiagCode::MissionEmptyWaypoints => "MISSION_EMPTY_WAYPOINTS",
            DiagCode::MissionNonpositiveParam => "MISSION_NONPOSITIVE_PARAM",
            DiagCode::MissionZeroLaps => "MISSION_ZERO_LAPS",
            DiagCode::MonitorNonpositiveThreshold => "MONITOR_NONPOSITIVE_THRESHOLD",
            DiagCode::MonitorSafeLandingForm => "MONITOR_SAFE_LANDING_FORM",
            DiagCode::MonitorDriftForm => "MONITOR_DRIFT_FORM",
            DiagCode::MonitorDriftFractionRange => "MONITOR_DRIFT_FRACTION_RANGE",
            DiagCode::MonitorFactorRange => "MONITOR_FACTOR_RANGE",
            DiagCode::FractionOnWaypointMission => "FRACTION_ON_WAYPOINT_MISSION",
            DiagCode::FuzzMaxBelowCurrent => "FUZZ_MAX_BELOW_CURRENT",
            DiagCode::FuzzZeroVariants => "FUZZ_ZERO_VARIANTS",
            DiagCode::FuzzLadderBelowCurrent => "FUZZ_LADDER_BELOW_CURRENT",
            DiagCode::FuzzPathNotFound => "FUZZ_PATH_NOT_FOUND",
            DiagCode::FuzzPathNotNumeric => "FUZZ_PATH_NOT_NUMERIC",
            DiagCode::SimDtRange => "SIM_DT_RANGE",
            DiagCode::SimNonpositiveDuration => "SIM_NONPOSITIVE_DURATION",
        };
        f.write_str(s)
    }
}

/// One validation finding: a stable code, a severity, the scenario path of
/// the offending field, and a human-readable explanation.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.code, self.path, self.message)
    }
}

fn err(diags: &mut Vec<Diagnostic>, code: DiagCode, path: impl Into<String>, msg: impl Into<String>) {
    diags.push(Diagnostic {
        code,
        severity: Severity::Error,
        path: path.into(),
        message: msg.into(),
    });
}

fn warn(diags: &mut Vec<Diagnostic>, code: DiagCode, path: impl Into<String>, msg: impl Into<String>) {
    diags.push(Diagnostic {
        code,
        severity: Severity::Warning,
        path: path.into(),
        message: msg.into(),
    });
}

fn check_geo(diags: &mut Vec<Diagnostic>, path: &str, p: crate::geo::GeoPoint) {
    if !p.is_finite()
        || p.lat_deg < -90.0
        || p.lat_deg > 90.0
        || p.lon_deg < -180.0
        || p.lon_deg > 180.0
        || p.alt_m < 0.0
    {
        err(
            diags,
            DiagCode::GeoRange,
            path,
            format!(
                "coordinate ({}, {}, {}) outside valid ranges",
                p.lat_deg, p.lon_deg, p.alt_m
            ),
        );
    }
}

/// Checks every invariant and cross-reference of a parsed scenario.
pub fn validate(s: &Scenario) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let region_ids: BTreeSet<&str> = s.regions.iter().map(|r| r.id.as_str()).collect();
    let drone_ids: BTreeSet<&str> = s.drones.iter().map(|d| d.id.as_str()).collect();

    // Origin.
    if !s.origin.is_finite() || s.origin.lat_deg <= -89.0 || s.origin.lat_deg >= 89.0 {
        err(
            &mut diags,
            DiagCode::OriginInvalid,
            "origin",
            format!(
                "origin latitude {} must be finite and inside (-89, 89)",
                s.origin.lat_deg
            ),
        );
    } else {
        check_geo(&mut diags, "origin", s.origin);
    }

    // Regions.
    let mut seen = BTreeSet::new();
    for (i, r) in s.regions.iter().enumerate() {
        let path = format!("regions[{i}]");
        if !seen.insert(r.id.as_str()) {
            err(
                &mut diags,
                DiagCode::RegionDupId,
                &path,
                format!("duplicate region id {:?}", r.id),
            );
        }
        if r.vertices.len() < 3 {
            err(
                &mut diags,
                DiagCode::RegionTooFewVertices,
                &path,
                format!("polygon needs at least 3 vertices, got {}", r.vertices.len()),
            );
        }
        for (j, v) in r.vertices.iter().enumerate() {
            check_geo(&mut diags, &format!("{path}.vertices[{j}]"), *v);
        }
        if r.vertices.len() >= 3
            && !r.polygon_enu.is_empty()
            && !geo::polygon_is_simple(&r.polygon_enu)
        {
            err(
                &mut diags,
                DiagCode::RegionSelfIntersecting,
                &path,
                "polygon outline self-intersects",
            );
        }
        if !r.alt_floor_m.is_finite() || !r.alt_ceiling_m.is_finite() || r.alt_floor_m >= r.alt_ceiling_m {
            err(
                &mut diags,
                DiagCode::RegionAltOrder,
                &path,
                format!(
                    "alt_floor {} must be finite and below alt_ceiling {}",
                    r.alt_floor_m, r.alt_ceiling_m
                ),
            );
        }
    }

    // Wind layers.
    for (i, l) in s.weather.layers.iter().enumerate() {
        let path = format!("weather.layers[{i}]");
        if !l.alt_lower_m.is_finite() || !l.alt_upper_m.is_finite() || l.alt_lower_m >= l.alt_upper_m {
            err(
                &mut diags,
                DiagCode::WindBandOrder,
                &path,
                format!("band [{}, {}) is not a valid altitude range", l.alt_lower_m, l.alt_upper_m),
            );
        }
        if l.speed_mps < 0.0 || l.gust_mps < 0.0 || !l.speed_mps.is_finite() || !l.gust_mps.is_finite() {
            err(
                &mut diags,
                DiagCode::WindNegativeSpeed,
                &path,
                "wind speed and gust must be finite and non-negative",
            );
        }
        if !(0.0..360.0).contains(&l.direction_deg) {
            err(
                &mut diags,
                DiagCode::WindDirectionRange,
                &path,
                format!("direction {} must be in [0, 360)", l.direction_deg),
            );
        }
        for (j, other) in s.weather.layers.iter().enumerate().skip(i + 1) {
            if l.alt_lower_m < other.alt_upper_m && other.alt_lower_m < l.alt_upper_m {
                err(
                    &mut diags,
                    DiagCode::OverlappingWindLayers,
                    &path,
                    format!(
                        "band [{}, {}) overlaps weather.layers[{j}] [{}, {})",
                        l.alt_lower_m, l.alt_upper_m, other.alt_lower_m, other.alt_upper_m
                    ),
                );
            }
        }
    }

    // GPS.
    match (s.gps.satellites, s.gps.deprivation_pct) {
        (Some(_), Some(_)) | (None, None) => err(
            &mut diags,
            DiagCode::GpsModeConflict,
            "gps",
            "exactly one of satellites / deprivation_pct must be given",
        ),
        (None, Some(d)) if !(0.0..=100.0).contains(&d) => err(
            &mut diags,
            DiagCode::GpsDeprivationRange,
            "gps.deprivation_pct",
            format!("deprivation {d} must be in [0, 100]"),
        ),
        _ => {}
    }
    for (i, id) in s.gps.dead_spot_region_ids.iter().enumerate() {
        if !region_ids.contains(id.as_str()) {
            err(
                &mut diags,
                DiagCode::UnknownRegionRef,
                format!("gps.dead_spot_region_ids[{i}]"),
                format!("region {id:?} does not exist"),
            );
        }
    }

    // Comms windows.
    for (i, c) in s.comms.iter().enumerate() {
        let path = format!("comms[{i}]");
        for id in &c.drone_ids {
            if !drone_ids.contains(id.as_str()) {
                err(
                    &mut diags,
                    DiagCode::UnknownDroneRef,
                    &path,
                    format!("drone {id:?} does not exist"),
                );
            }
        }
        if !c.start_s.is_finite() || c.start_s < 0.0 {
            err(&mut diags, DiagCode::CommsNegativeStart, &path, "start_s must be finite and >= 0");
        }
        if !c.duration_s.is_finite() || c.duration_s <= 0.0 {
            err(
                &mut diags,
                DiagCode::CommsNonpositiveDuration,
                &path,
                "duration_s must be finite and > 0",
            );
        }
    }

    // Interventions.
    for (i, ev) in s.interventions.iter().enumerate() {
        let path = format!("interventions[{i}]");
        if !ev.t_s.is_finite() || ev.t_s < 0.0 {
            err(&mut diags, DiagCode::InterventionNegativeTime, &path, "t_s must be finite and >= 0");
        }
        if !drone_ids.contains(ev.drone_id.as_str()) {
            err(
                &mut diags,
                DiagCode::UnknownDroneRef,
                &path,
                format!("drone {:?} does not exist", ev.drone_id),
            );
        }
    }

    // Drones.
    let mut seen = BTreeSet::new();
    for (i, d) in s.drones.iter().enumerate() {
        let path = format!("drones[{i}]");
        if !seen.insert(d.id.as_str()) {
            err(
                &mut diags,
                DiagCode::DroneDupId,
                &path,
                format!("duplicate drone id {:?}", d.id),
            );
        }
        check_geo(&mut diags, &format!("{path}.home"), d.home);
        if !d.max_airspeed_mps.is_finite()
            || !d.cruise_speed_mps.is_finite()
            || d.cruise_speed_mps <= 0.0
            || d.cruise_speed_mps > d.max_airspeed_mps
        {
            err(
                &mut diags,
                DiagCode::DroneSpeedOrder,
                &path,
                format!(
                    "cruise speed {} must be in (0, max_airspeed {}], both finite",
                    d.cruise_speed_mps, d.max_airspeed_mps
                ),
            );
        }
        let rates_ok = d.climb_rate_mps > 0.0
            && d.climb_rate_mps.is_finite()
            && d.descent_rate_mps > 0.0
            && d.descent_rate_mps.is_finite()
            && d.accept_radius_m > 0.0
            && d.accept_radius_m.is_finite()
            && d.rtl_alt_m >= 0.0
            && d.rtl_alt_m.is_finite();
        if !rates_ok {
            err(
                &mut diags,
                DiagCode::DroneNonpositiveParam,
                &path,
                "climb/descent rates and accept_radius must be finite and > 0, rtl_alt finite and >= 0",
            );
        }
    }

    // Missions: exactly one per drone, ids must match.
    for d in &s.drones {
        if !s.missions.contains_key(&d.id) {
            err(
                &mut diags,
                DiagCode::MissionMissing,
                format!("missions.{}", d.id),
                format!("drone {:?} has no mission", d.id),
            );
        }
    }
    for (id, m) in &s.missions {
        let path = format!("missions.{id}");
        if !drone_ids.contains(id.as_str()) {
            err(
                &mut diags,
                DiagCode::UnknownDroneRef,
                &path,
                format!("mission assigned to unknown drone {id:?}"),
            );
        }
        match m {
            Mission::Waypoints { waypoints } => {
                if waypoints.is_empty() {
                    err(
                        &mut diags,
                        DiagCode::MissionEmptyWaypoints,
                        &path,
                        "waypoint list must be nonempty",
                    );
                }
                for (j, w) in waypoints.iter().enumerate() {
                    check_geo(&mut diags, &format!("{path}.waypoints[{j}]"), *w);
                }
            }
            Mission::Circle {
                center,
                radius_m,
                alt_m,
                speed_mps,
                laps,
            } => {
                check_geo(&mut diags, &format!("{path}.center"), *center);
                if !(radius_m.is_finite() && *radius_m > 0.0)
                    || !(speed_mps.is_finite() && *speed_mps > 0.0)
                    || !(alt_m.is_finite() && *alt_m >= 0.0)
                {
                    err(
                        &mut diags,
                        DiagCode::MissionNonpositiveParam,
                        &path,
                        "radius and speed must be finite and > 0, alt finite and >= 0",
                    );
                }
                if *laps < 1 {
                    err(&mut diags, DiagCode::MissionZeroLaps, &path, "laps must be >= 1");
                }
            }
            Mission::Square {
                center,
                side_m,
                alt_m,
                speed_mps,
            } => {
                check_geo(&mut diags, &format!("{path}.center"), *center);
                if !(side_m.is_finite() && *side_m > 0.0)
                    || !(speed_mps.is_finite() && *speed_mps > 0.0)
                    || !(alt_m.is_finite() && *alt_m >= 0.0)
                {
                    err(
                        &mut diags,
                        DiagCode::MissionNonpositiveParam,
                        &path,
                        "side and speed must be finite and > 0, alt finite and >= 0",
                    );
                }
            }
        }
    }

    // Monitors.
    let all_circle = s
        .missions
        .values()
        .all(|m| matches!(m, Mission::Circle { .. }));
    for (i, m) in s.monitors.iter().enumerate() {
        let path = format!("monitors[{i}]");
        match m {
            MonitorSpec::MinSeparation { min_m, .. } => {
                if !(min_m.is_finite() && *min_m > 0.0) {
                    err(
                        &mut diags,
                        DiagCode::MonitorNonpositiveThreshold,
                        &path,
                        "min separation must be finite and > 0",
                    );
                }
            }
            MonitorSpec::NoFlyZone { region_ids: ids } => {
                for id in ids {
                    if !region_ids.contains(id.as_str()) {
                        err(
                            &mut diags,
                            DiagCode::UnknownRegionRef,
                            &path,
                            format!("region {id:?} does not exist"),
                        );
                    }
                }
            }
            MonitorSpec::SafeLanding {
                allowed_region_ids,
                forbidden_region_ids,
            } => {
                match (allowed_region_ids, forbidden_region_ids) {
                    (Some(_), Some(_)) | (None, None) => err(
                        &mut diags,
                        DiagCode::MonitorSafeLandingForm,
                        &path,
                        "exactly one of allowed_region_ids / forbidden_region_ids must be given",
                    ),
                    _ => {}
                }
                for id in allowed_region_ids
                    .iter()
                    .chain(forbidden_region_ids.iter())
                    .flatten()
                {
                    if !region_ids.contains(id.as_str()) {
                        err(
                            &mut diags,
                            DiagCode::UnknownRegionRef,
                            &path,
                            format!("region {id:?} does not exist"),
                        );
                    }
                }
            }
            MonitorSpec::DriftBound {
                absolute_m,
                fraction,
                wind_gate_mps,
            } => {
                match (absolute_m, fraction) {
                    (Some(_), Some(_)) | (None, None) => err(
                        &mut diags,
                        DiagCode::MonitorDriftForm,
                        &path,
                        "exactly one of absolute / fraction must be given",
                    ),
                    (Some(a), None) if !(a.is_finite() && *a > 0.0) => err(
                        &mut diags,
                        DiagCode::MonitorNonpositiveThreshold,
                        &path,
                        "absolute drift bound must be > 0",
                    ),
                    (None, Some(f)) if !(*f > 0.0 && *f <= 1.0) => err(
                        &mut diags,
                        DiagCode::MonitorDriftFractionRange,
                        &path,
                        format!("fraction {f} must be in (0, 1]"),
                    ),
                    _ => {}
                }
                if fraction.is_some() && !all_circle {
                    err(
                        &mut diags,
                        DiagCode::FractionOnWaypointMission,
                        &path,
                        "fractional drift bounds are defined only for circle missions",
                    );
                }
                if let Some(g) = wind_gate_mps {
                    if !(g.is_finite() && *g >= 0.0) {
                        err(
                            &mut diags,
                            DiagCode::MonitorNonpositiveThreshold,
                            &path,
                            "wind gate must be finite and >= 0",
                        );
                    }
                }
            }
            MonitorSpec::WaypointReach { tolerance_m } => {
                if !(tolerance_m.is_finite() && *tolerance_m > 0.0) {
                    err(
                        &mut diags,
                        DiagCode::MonitorNonpositiveThreshold,
                        &path,
                        "tolerance must be finite and > 0",
                    );
                }
            }
            MonitorSpec::DurationBound { baseline_s, factor } => {
                if !(baseline_s.is_finite() && *baseline_s > 0.0) {
                    err(
                        &mut diags,
                        DiagCode::MonitorNonpositiveThreshold,
                        &path,
                        "baseline_s must be finite and > 0",
                    );
                }
                if !(factor.is_finite() && *factor >= 1.0) {
                    err(
                        &mut diags,
                        DiagCode::MonitorFactorRange,
                        &path,
                        format!("factor {factor} must be finite and >= 1"),
                    );
                }
            }
        }
    }

    // Fuzz plan.
    if let Some(f) = &s.fuzz {
        let path = "fuzz";
        if f.variants < 1 {
            err(&mut diags, DiagCode::FuzzZeroVariants, path, "variants must be >= 1");
        }
        if !f.max_value.is_finite() {
            err(
                &mut diags,
                DiagCode::FuzzMaxBelowCurrent,
                path,
                "max_value must be finite",
            );
        }
        match resolve_param_path(s, &f.param_path) {
            Err(PathError::NotFound(p)) => err(
                &mut diags,
                DiagCode::FuzzPathNotFound,
                path,
                format!("param_path {p:?} does not resolve"),
            ),
            Err(PathError::NotNumeric(p)) => err(
                &mut diags,
                DiagCode::FuzzPathNotNumeric,
                path,
                format!("param_path {p:?} is not a numeric field"),
            ),
            Ok(handle) => {
                let current = handle.read(s);
                if current != 0.0 && f.max_value <= current {
                    err(
                        &mut diags,
                        DiagCode::FuzzMaxBelowCurrent,
                        path,
                        format!(
                            "max_value {} must exceed the current value {} of {:?}",
                            f.max_value, current, f.param_path
                        ),
                    );
                } else if f.variants >= 1 {
                    let lowest = f.max_value * 2f64.powi(1 - f.variants as i32);
                    if current > 0.0 && lowest <= current {
                        warn(
                            &mut diags,
                            DiagCode::FuzzLadderBelowCurrent,
                            path,
                            format!(
                                "lowest ladder value {} does not exceed the current value {}",
                                lowest, current
                            ),
                        );
                    }
                }
            }
        }
    }

    // Sim parameters.
    if !(s.sim.dt_s > 0.0 && s.sim.dt_s <= 1.0) {
        err(
            &mut diags,
            DiagCode::SimDtRange,
            "sim.dt_s",
            format!("dt {} must be in (0, 1]", s.sim.dt_s),
        );
    }
    if !(s.sim.max_duration_s.is_finite() && s.sim.max_duration_s > 0.0) {
        err(
            &mut diags,
            DiagCode::SimNonpositiveDuration,
            "sim.max_duration_s",
            "max_duration_s must be finite and > 0",
        );
    }

    diags
}

/// True when the scenario has no error-severity diagnostics (warnings are
/// allowed).
pub fn is_runnable(diags: &[Diagnostic]) -> bool {
    diags.iter().all(|d| d.severity != Severity::Error)
}
