//! Runtime verification: evaluates every configured monitor against a run's
//! telemetry and produces violations and a PASSED/FAILED verdict.
//!
//! Conventions shared by all checkers:
//! - breaches are strict comparisons against thresholds (a separation equal
//!   to the minimum passes, a drift equal to the bound passes);
//! - "airborne" means more than 1 m above ground;
//! - monitors read TRUE positions — safety is about physical reality, and
//!   GPS error shows up as a cause of deviation, not as measurement noise;
//! - consecutive breaching ticks merge into one violation episode.

use std::collections::BTreeMap;

use crate::engine::{DroneOutcome, RunResult, TelemetryRecord};
use crate::geo::{self, EnuPoint, Region};
use crate::scenario::{Mission, MonitorSpec, Scenario};
use crate::vehicle::{expand_mission, Mode};

pub const AIRBORNE_ALT_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Passed,
    Failed,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::Passed => f.write_str("PASSED"),
            Status::Failed => f.write_str("FAILED"),
        }
    }
}

/// One recorded breach episode of one monitor.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Violation {
    /// `<kind>#<declaration index>`, e.g. `min_separation#0`.
    pub monitor_id: String,
    /// First tick of the breach episode.
    pub t_s: f64,
    pub drone_ids: Vec<String>,
    pub measured: f64,
    pub unit: String,
    pub threshold: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Verdict {
    pub status: Status,
    pub violations: Vec<Violation>,
}

impl Verdict {
    fn from_violations(violations: Vec<Violation>) -> Self {
        let status = if violations.is_empty() {
            Status::Passed
        } else {
            Status::Failed
        };
        Verdict { status, violations }
    }
}

// ---------------------------------------------------------------------------
// Episode merging
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Breach {
    t_s: f64,
    measured: f64,
}

enum Aggregate {
    Min,
    Max,
}

/// Splits a time-ordered breach list into episodes (gap > 1.5·dt starts a
/// new one) and aggregates the measured value per episode.
fn merge_episodes(breaches: &[Breach], dt: f64, agg: Aggregate) -> Vec<Breach> {
    let mut episodes = Vec::new();
    let mut current: Option<Breach> = None;
    let mut last_t = f64::NEG_INFINITY;
    for b in breaches {
        match current.as_mut() {
            Some(ep) if b.t_s - last_t <= dt * 1.5 => {
                ep.measured = match agg {
                    Aggregate::Min => ep.measured.min(b.measured),
                    Aggregate::Max => ep.measured.max(b.measured),
                };
            }
            _ => {
                if let Some(ep) = current.take() {
                    episodes.push(ep);
                }
                current = Some(*b);
            }
        }
        last_t = b.t_s;
    }
    if let Some(ep) = current {
        episodes.push(ep);
    }
    episodes
}

fn ticks(telemetry: &[TelemetryRecord]) -> Vec<(f64, Vec<&TelemetryRecord>)> {
    let mut grouped: Vec<(f64, Vec<&TelemetryRecord>)> = Vec::new();
    for rec in telemetry {
        match grouped.last_mut() {
            Some((t, group)) if *t == rec.t_s => group.push(rec),
            _ => grouped.push((rec.t_s, vec![rec])),
        }
    }
    grouped
}

// ---------------------------------------------------------------------------
// Individual checkers
// ---------------------------------------------------------------------------

/// Lateral separation: every unordered airborne pair must keep at least
/// `min_m` meters of horizontal distance. With a mode filter, only ticks
/// where both drones are in that mode are checked.
pub fn check_separation(
    telemetry: &[TelemetryRecord],
    dt: f64,
    min_m: f64,
    mode_filter: Option<Mode>,
    monitor_id: &str,
) -> Vec<Violation> {
    let mut per_pair: BTreeMap<(String, String), Vec<Breach>> = BTreeMap::new();
    for (t, group) in ticks(telemetry) {
        for (i, a) in group.iter().enumerate() {
            for b in group.iter().skip(i + 1) {
                if !a.airborne() || !b.airborne() {
                    continue;
                }
                if let Some(filter) = mode_filter {
                    if a.mode != filter || b.mode != filter {
                        continue;
                    }
                }
                let d = geo::horizontal_distance(a.true_pos, b.true_pos);
                if d < min_m {
                    let key = if a.drone_id <= b.drone_id {
                        (a.drone_id.clone(), b.drone_id.clone())
                    } else {
                        (b.drone_id.clone(), a.drone_id.clone())
                    };
                    per_pair
                        .entry(key)
                        .or_default()
                        .push(Breach { t_s: t, measured: d });
                }
            }
        }
    }
    let mut violations = Vec::new();
    for ((a, b), breaches) in per_pair {
        for ep in merge_episodes(&breaches, dt, Aggregate::Min) {
            violations.push(Violation {
                monitor_id: monitor_id.to_string(),
                t_s: ep.t_s,
                drone_ids: vec![a.clone(), b.clone()],
                measured: ep.measured,
                unit: "m".into(),
                threshold: min_m,
                message: format!(
                    "{a} and {b} closed to {:.3} m (minimum {} m) from t={:.1} s",
                    ep.measured, min_m, ep.t_s
                ),
            });
        }
    }
    sort_violations(&mut violations);
    violations
}

/// No-fly zones: an airborne drone must never be inside any listed region.
/// The measured value is the horizontal penetration depth, positive inward.
pub fn check_no_fly(
    telemetry: &[TelemetryRecord],
    dt: f64,
    regions: &[Region],
    monitor_id: &str,
) -> Vec<Violation> {
    let mut per_key: BTreeMap<(String, String), Vec<Breach>> = BTreeMap::new();
    for rec in telemetry {
        if !rec.airborne() {
            continue;
        }
        for region in regions {
            if geo::contains(region, rec.true_pos) {
                let depth =
                    geo::penetration_depth(&region.polygon, rec.true_pos.east_m, rec.true_pos.north_m);
                per_key
                    .entry((rec.drone_id.clone(), region.id.clone()))
                    .or_default()
                    .push(Breach {
                        t_s: rec.t_s,
                        measured: depth,
                    });
            }
        }
    }
    let mut violations = Vec::new();
    for ((drone, region), breaches) in per_key {
        for ep in merge_episodes(&breaches, dt, Aggregate::Max) {
            violations.push(Violation {
                monitor_id: monitor_id.to_string(),
                t_s: ep.t_s,
                drone_ids: vec![drone.clone()],
                measured: ep.measured,
                unit: "m".into(),
                threshold: 0.0,
                message: format!(
                    "{drone} entered no-fly zone {region} at t={:.1} s, max penetration {:.3} m",
                    ep.t_s, ep.measured
                ),
            });
        }
    }
    sort_violations(&mut violations);
    violations
}

/// The landing record for one drone: the first tick at or below 1 m in
/// LAND/LANDED mode, or the final record if the run ends with the drone
/// below 1 m.
fn landing_record<'a>(records: &[&'a TelemetryRecord]) -> Option<&'a TelemetryRecord> {
    records
        .iter()
        .find(|r| r.true_pos.up_m <= AIRBORNE_ALT_M && matches!(r.mode, Mode::Land | Mode::Landed))
        .copied()
        .or_else(|| {
            records
                .last()
                .filter(|r| r.true_pos.up_m <= AIRBORNE_ALT_M)
                .copied()
        })
}

/// Safe landing: the touchdown position must be outside every forbidden
/// region (forbidden form) or inside at least one allowed region (allowed
/// form).
pub fn check_safe_landing(
    telemetry: &[TelemetryRecord],
    allowed: Option<&[Region]>,
    forbidden: Option<&[Region]>,
    monitor_id: &str,
) -> Vec<Violation> {
    let mut per_drone: BTreeMap<String, Vec<&TelemetryRecord>> = BTreeMap::new();
    for rec in telemetry {
        per_drone.entry(rec.drone_id.clone()).or_default().push(rec);
    }
    let mut violations = Vec::new();
    for (drone, records) in per_drone {
        let Some(rec) = landing_record(&records) else {
            continue;
        };
        let pos = rec.true_pos;
        if let Some(forbidden) = forbidden {
            for region in forbidden {
                if geo::contains(region, pos) {
                    let depth =
                        geo::penetration_depth(&region.polygon, pos.east_m, pos.north_m);
                    violations.push(Violation {
                        monitor_id: monitor_id.to_string(),
                        t_s: rec.t_s,
                        drone_ids: vec![drone.clone()],
                        measured: depth,
                        unit: "m".into(),
                        threshold: 0.0,
                        message: format!(
                            "{drone} landed inside forbidden region {} at t={:.1} s",
                            region.id, rec.t_s
                        ),
                    });
                }
            }
        }
        if let Some(allowed) = allowed {
            if !allowed.iter().any(|r| geo::contains(r, pos)) {
                // Distance to the nearest allowed region, as a diagnostic.
                let dist = allowed
                    .iter()
                    .map(|r| -geo::penetration_depth(&r.polygon, pos.east_m, pos.north_m))
                    .fold(f64::INFINITY, f64::min);
                violations.push(Violation {
                    monitor_id: monitor_id.to_string(),
                    t_s: rec.t_s,
                    drone_ids: vec![drone.clone()],
                    measured: dist,
                    unit: "m".into(),
                    threshold: 0.0,
                    message: format!(
                        "{drone} landed outside every allowed region at t={:.1} s ({:.3} m from nearest)",
                        rec.t_s, dist
                    ),
                });
            }
        }
    }
    sort_violations(&mut violations);
    violations
}

/// What a drone's path is compared against by the drift monitor.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftPlan {
    /// Radial deviation from a commanded circle.
    Circle { center: EnuPoint, radius_m: f64 },
    /// Distance to the planned polyline (the entry leg from above the home
    /// position to the first waypoint is part of the plan).
    Path { legs: Vec<(EnuPoint, EnuPoint)> },
}

impl DriftPlan {
    pub fn deviation(&self, pos: EnuPoint) -> f64 {
        match self {
            DriftPlan::Circle { center, radius_m } => {
                (geo::horizontal_distance(pos, *center) - radius_m).abs()
            }
            DriftPlan::Path { legs } => legs
                .iter()
                .filter_map(|(a, b)| geo::cross_track(pos, *a, *b).ok())
                .fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftLimit {
    AbsoluteM(f64),
    /// Fraction of the commanded circle radius; only valid with
    /// [`DriftPlan::Circle`].
    Fraction(f64),
}

/// Drift check for one drone's telemetry against its plan. Only airborne
/// MISSION-mode ticks count, and only ticks at or above the wind gate when
/// one is set. With a fractional limit, both measured value and threshold
/// are fractions of the commanded radius.
pub fn check_drift(
    telemetry: &[TelemetryRecord],
    dt: f64,
    drone_id: &str,
    plan: &DriftPlan,
    limit: DriftLimit,
    wind_gate_mps: Option<f64>,
    monitor_id: &str,
) -> Vec<Violation> {
    let radius = match (&limit, plan) {
        (DriftLimit::Fraction(_), DriftPlan::Circle { radius_m, .. }) => *radius_m,
        (DriftLimit::Fraction(_), DriftPlan::Path { .. }) => {
            // Rejected at validation; nothing sensible to measure here.
            return Vec::new();
        }
        _ => 1.0,
    };
    let mut breaches = Vec::new();
    for rec in telemetry {
        if rec.drone_id != drone_id || rec.mode != Mode::Mission || !rec.airborne() {
            continue;
        }
        if let Some(gate) = wind_gate_mps {
            if rec.wind_speed() < gate {
                continue;
            }
        }
        let deviation = plan.deviation(rec.true_pos);
        if !deviation.is_finite() {
            // A plan with no usable legs (e.g. a single waypoint straight
            // above home) has no measurable drift.
            continue;
        }
        let (value, threshold_hit) = match limit {
            DriftLimit::AbsoluteM(a) => (deviation, deviation > a),
            DriftLimit::Fraction(f) => (deviation / radius, deviation / radius > f),
        };
        if threshold_hit {
            breaches.push(Breach {
                t_s: rec.t_s,
                measured: value,
            });
        }
    }
    let (threshold, unit) = match limit {
        DriftLimit::AbsoluteM(a) => (a, "m"),
        DriftLimit::Fraction(f) => (f, "fraction"),
    };
    let mut violations = merge_episodes(&breaches, dt, Aggregate::Max)
        .into_iter()
        .map(|ep| Violation {
            monitor_id: monitor_id.to_string(),
            t_s: ep.t_s,
            drone_ids: vec![drone_id.to_string()],
            measured: ep.measured,
            unit: unit.into(),
            threshold,
            message: format!(
                "{drone_id} drifted {:.3} {unit} from the planned path (bound {threshold}) from t={:.1} s",
                ep.measured, ep.t_s
            ),
        })
        .collect::<Vec<_>>();
    sort_violations(&mut violations);
    violations
}

/// Waypoint reach: each planned waypoint must be approached within
/// `tolerance + accept_radius` meters of true position at some tick.
pub fn check_waypoint_reach(
    telemetry: &[TelemetryRecord],
    drone_id: &str,
    waypoints: &[EnuPoint],
    tolerance_m: f64,
    accept_radius_m: f64,
    monitor_id: &str,
) -> Vec<Violation> {
    let records: Vec<&TelemetryRecord> = telemetry
        .iter()
        .filter(|r| r.drone_id == drone_id)
        .collect();
    if records.is_empty() {
        return Vec::new();
    }
    let threshold = tolerance_m + accept_radius_m;
    let mut violations = Vec::new();
    for (k, wp) in waypoints.iter().enumerate() {
        let (mut best, mut best_t) = (f64::INFINITY, records[0].t_s);
        for rec in &records {
            let d = geo::horizontal_distance(rec.true_pos, *wp);
            if d < best {
                best = d;
                best_t = rec.t_s;
            }
        }
        if best > threshold {
            violations.push(Violation {
                monitor_id: monitor_id.to_string(),
                t_s: best_t,
                drone_ids: vec![drone_id.to_string()],
                measured: best,
                unit: "m".into(),
                threshold,
                message: format!(
                    "{drone_id} never came closer than {best:.3} m to waypoint {k} (required {threshold} m)"
                ),
            });
        }
    }
    sort_violations(&mut violations);
    violations
}

/// Duration bound: the mission must complete, and within
/// `baseline_s * factor` seconds.
pub fn check_duration(
    outcome: &DroneOutcome,
    drone_id: &str,
    baseline_s: f64,
    factor: f64,
    max_duration_s: f64,
    run_end_t_s: f64,
    monitor_id: &str,
) -> Vec<Violation> {
    let bound = baseline_s * factor;
    let breach = !outcome.completed || outcome.duration_s > bound;
    if !breach {
        return Vec::new();
    }
    let measured = if outcome.completed {
        outcome.duration_s
    } else {
        max_duration_s
    };
    let message = if outcome.completed {
        format!("{drone_id} finished in {measured:.1} s, over the {bound:.1} s bound")
    } else {
        format!("{drone_id} did not complete its mission (bound {bound:.1} s)")
    };
    vec![Violation {
        monitor_id: monitor_id.to_string(),
        t_s: run_end_t_s,
        drone_ids: vec![drone_id.to_string()],
        measured,
        unit: "s".into(),
        threshold: bound,
        message,
    }]
}

fn sort_violations(violations: &mut [Violation]) {
    violations.sort_by(|a, b| {
        a.t_s
            .partial_cmp(&b.t_s)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.drone_ids.cmp(&b.drone_ids))
    });
}

/// Builds the drift plan for one drone from its mission.
pub fn drift_plan_for(
    s: &Scenario,
    drone_id: &str,
) -> Option<DriftPlan> {
    let mission = s.missions.get(drone_id)?;
    match mission {
        Mission::Circle {
            center, radius_m, ..
        } => {
            let c = geo::to_enu(s.origin, *center).ok()?;
            Some(DriftPlan::Circle {
                center: c,
                radius_m: *radius_m,
            })
        }
        _ => {
            let cfg = s.drone(drone_id)?;
            let home = geo::to_enu(s.origin, cfg.home).ok()?;
            let wps = expand_mission(mission, s.origin).ok()?;
            let first = wps.first()?;
            let mut legs = Vec::new();
            let mut prev = EnuPoint::new(home.east_m, home.north_m, first.up_m);
            for wp in &wps {
                if geo::horizontal_distance(prev, *wp) > 0.0 {
                    legs.push((prev, *wp));
                }
                prev = *wp;
            }
            Some(DriftPlan::Path { legs })
        }
    }
}

/// Evaluates every monitor of the scenario against a run. Violations are
/// ordered by (monitor declaration order, time, drones); the verdict is
/// PASSED iff the list is empty.
pub fn evaluate(monitors: &[MonitorSpec], run: &RunResult, s: &Scenario) -> Verdict {
    let dt = run.dt_s;
    let mut all_violations = Vec::new();
    let drone_ids: Vec<String> = s.drones.iter().map(|d| d.id.clone()).collect();

    for (idx, spec) in monitors.iter().enumerate() {
        let monitor_id = format!("{}#{}", spec.kind(), idx);
        let mut violations = Vec::new();
        match spec {
            MonitorSpec::MinSeparation { min_m, mode_filter } => {
                violations.extend(check_separation(
                    &run.telemetry,
                    dt,
                    *min_m,
                    *mode_filter,
                    &monitor_id,
                ));
            }
            MonitorSpec::NoFlyZone { region_ids } => {
                let regions = s.region_volumes(region_ids);
                violations.extend(check_no_fly(&run.telemetry, dt, &regions, &monitor_id));
            }
            MonitorSpec::SafeLanding {
                allowed_region_ids,
                forbidden_region_ids,
            } => {
                let allowed = allowed_region_ids.as_ref().map(|ids| s.region_volumes(ids));
                let forbidden = forbidden_region_ids
                    .as_ref()
                    .map(|ids| s.region_volumes(ids));
                violations.extend(check_safe_landing(
                    &run.telemetry,
                    allowed.as_deref(),
                    forbidden.as_deref(),
                    &monitor_id,
                ));
            }
            MonitorSpec::DriftBound {
                absolute_m,
                fraction,
                wind_gate_mps,
            } => {
                let limit = match (absolute_m, fraction) {
                    (Some(a), _) => DriftLimit::AbsoluteM(*a),
                    (None, Some(f)) => DriftLimit::Fraction(*f),
                    (None, None) => continue,
                };
                for id in &drone_ids {
                    if let Some(plan) = drift_plan_for(s, id) {
                        violations.extend(check_drift(
                            &run.telemetry,
                            dt,
                            id,
                            &plan,
                            limit,
                            *wind_gate_mps,
                            &monitor_id,
                        ));
                    }
                }
            }
            MonitorSpec::WaypointReach { tolerance_m } => {
                for id in &drone_ids {
                    let (Some(cfg), Some(mission)) = (s.drone(id), s.missions.get(id)) else {
                        continue;
                    };
                    let Ok(wps) = expand_mission(mission, s.origin) else {
                        continue;
                    };
                    violations.extend(check_waypoint_reach(
                        &run.telemetry,
                        id,
                        &wps,
                        *tolerance_m,
                        cfg.accept_radius_m,
                        &monitor_id,
                    ));
                }
            }
            MonitorSpec::DurationBound { baseline_s, factor } => {
                for id in &drone_ids {
                    if let Some(outcome) = run.outcomes.get(id) {
                        violations.extend(check_duration(
                            outcome,
                            id,
                            *baseline_s,
                            *factor,
                            s.sim.max_duration_s,
                            run.duration_s,
                            &monitor_id,
                        ));
                    }
                }
            }
        }
        // Checkers that run per drone concatenate out of time order;
        // re-establish (t_s, drones) within the monitor.
        sort_violations(&mut violations);
        all_violations.extend(violations);
    }

    Verdict::from_violations(all_violations)
}
