//! Brute-force reference checker for the monitor engine, plus a random
//! scenario/telemetry generator.
//!
//! The checker re-implements every monitor as naive per-tick loops that
//! collect raw breaches first and merge them into episodes afterwards. It
//! shares only the geometry primitives (which have their own independent
//! oracles) with the production path; all gating, filtering, episode and
//! ordering logic is written from scratch here.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use skysim::engine::{DroneOutcome, RunResult, TelemetryRecord, Termination};
use skysim::geo::{self, EnuPoint, GeoPoint};
use skysim::monitors::{Status, Verdict, Violation};
use skysim::scenario::{
    DroneConfig, GpsConfig, Mission, MonitorSpec, Scenario, SimParams, Weather,
};
use skysim::vehicle::Mode;

/// The comparable core of a violation: everything except the prose message.
#[derive(Debug, Clone, PartialEq)]
pub struct Essence {
    pub monitor_id: String,
    pub t_s: f64,
    pub drone_ids: Vec<String>,
    pub measured: f64,
    pub threshold: f64,
    pub unit: String,
}

pub fn essence(v: &Violation) -> Essence {
    Essence {
        monitor_id: v.monitor_id.clone(),
        t_s: v.t_s,
        drone_ids: v.drone_ids.clone(),
        measured: v.measured,
        threshold: v.threshold,
        unit: v.unit.clone(),
    }
}

pub fn essences(verdict: &Verdict) -> Vec<Essence> {
    verdict.violations.iter().map(essence).collect()
}

const AIRBORNE: f64 = 1.0;

struct RawBreach {
    t_s: f64,
    measured: f64,
}

fn merged(raw: Vec<RawBreach>, dt: f64, take_max: bool) -> Vec<(f64, f64)> {
    let mut episodes: Vec<(f64, f64)> = Vec::new();
    let mut prev_t = f64::NEG_INFINITY;
    for b in raw {
        let fresh = b.t_s - prev_t > dt * 1.5;
        if fresh {
            episodes.push((b.t_s, b.measured));
        } else {
            let last = episodes.last_mut().unwrap();
            last.1 = if take_max {
                last.1.max(b.measured)
            } else {
                last.1.min(b.measured)
            };
        }
        prev_t = b.t_s;
    }
    episodes
}

fn tick_times(telemetry: &[TelemetryRecord]) -> Vec<f64> {
    let mut times: Vec<f64> = Vec::new();
    for r in telemetry {
        if times.last() != Some(&r.t_s) {
            times.push(r.t_s);
        }
    }
    times
}

fn at_tick(telemetry: &[TelemetryRecord], t: f64) -> Vec<&TelemetryRecord> {
    telemetry.iter().filter(|r| r.t_s == t).collect()
}

/// Independent re-evaluation of every monitor. Output tuples match the
/// production engine's violations exactly when both are correct.
pub fn brute_evaluate(monitors: &[MonitorSpec], run: &RunResult, s: &Scenario) -> Vec<Essence> {
    let dt = run.dt_s;
    let mut all = Vec::new();
    for (idx, spec) in monitors.iter().enumerate() {
        let id = format!("{}#{}", spec.kind(), idx);
        let mut out: Vec<Essence> = Vec::new();
        match spec {
            MonitorSpec::MinSeparation { min_m, mode_filter } => {
                let mut pairs: BTreeMap<(String, String), Vec<RawBreach>> = BTreeMap::new();
                for t in tick_times(&run.telemetry) {
                    let group = at_tick(&run.telemetry, t);
                    for i in 0..group.len() {
                        for j in (i + 1)..group.len() {
                            let (a, b) = (group[i], group[j]);
                            if a.true_pos.up_m <= AIRBORNE || b.true_pos.up_m <= AIRBORNE {
                                continue;
                            }
                            if let Some(f) = mode_filter {
                                if a.mode != *f || b.mode != *f {
                                    continue;
                                }
                            }
                            let d = geo::horizontal_distance(a.true_pos, b.true_pos);
                            if d < *min_m {
                                let key = if a.drone_id <= b.drone_id {
                                    (a.drone_id.clone(), b.drone_id.clone())
                                } else {
                                    (b.drone_id.clone(), a.drone_id.clone())
                                };
                                pairs
                                    .entry(key)
                                    .or_default()
                                    .push(RawBreach { t_s: t, measured: d });
                            }
                        }
                    }
                }
                for ((a, b), raw) in pairs {
                    for (t0, m) in merged(raw, dt, false) {
                        out.push(Essence {
                            monitor_id: id.clone(),
                            t_s: t0,
                            drone_ids: vec![a.clone(), b.clone()],
                            measured: m,
                            threshold: *min_m,
                            unit: "m".into(),
                        });
                    }
                }
            }
            MonitorSpec::NoFlyZone { region_ids } => {
                let regions = s.region_volumes(region_ids);
                let mut keys: BTreeMap<(String, String), Vec<RawBreach>> = BTreeMap::new();
                for r in &run.telemetry {
                    if r.true_pos.up_m <= AIRBORNE {
                        continue;
                    }
                    for region in &regions {
                        if geo::contains(region, r.true_pos) {
                            keys.entry((r.drone_id.clone(), region.id.clone()))
                                .or_default()
                                .push(RawBreach {
                                    t_s: r.t_s,
                                    measured: geo::penetration_depth(
                                        &region.polygon,
                                        r.true_pos.east_m,
                                        r.true_pos.north_m,
                                    ),
                                });
                        }
                    }
                }
                for ((drone, _region), raw) in keys {
                    for (t0, m) in merged(raw, dt, true) {
                        out.push(Essence {
                            monitor_id: id.clone(),
                            t_s: t0,
                            drone_ids: vec![drone.clone()],
                            measured: m,
                            threshold: 0.0,
                            unit: "m".into(),
                        });
                    }
                }
            }
            MonitorSpec::SafeLanding {
                allowed_region_ids,
                forbidden_region_ids,
            } => {
                let allowed = allowed_region_ids.as_ref().map(|ids| s.region_volumes(ids));
                let forbidden = forbidden_region_ids
                    .as_ref()
                    .map(|ids| s.region_volumes(ids));
                let mut drones: Vec<String> = run
                    .telemetry
                    .iter()
                    .map(|r| r.drone_id.clone())
                    .collect();
                drones.sort();
                drones.dedup();
                for drone in drones {
                    let records: Vec<&TelemetryRecord> = run
                        .telemetry
                        .iter()
                        .filter(|r| r.drone_id == drone)
                        .collect();
                    let landing = records
                        .iter()
                        .find(|r| {
                            r.true_pos.up_m <= AIRBORNE
                                && matches!(r.mode, Mode::Land | Mode::Landed)
                        })
                        .copied()
                        .or_else(|| {
                            records
                                .last()
                                .filter(|r| r.true_pos.up_m <= AIRBORNE)
                                .copied()
                        });
                    let Some(rec) = landing else { continue };
                    if let Some(forbidden) = &forbidden {
                        for region in forbidden {
                            if geo::contains(region, rec.true_pos) {
                                out.push(Essence {
                                    monitor_id: id.clone(),
                                    t_s: rec.t_s,
                                    drone_ids: vec![drone.clone()],
                                    measured: geo::penetration_depth(
                                        &region.polygon,
                                        rec.true_pos.east_m,
                                        rec.true_pos.north_m,
                                    ),
                                    threshold: 0.0,
                                    unit: "m".into(),
                                });
                            }
                        }
                    }
                    if let Some(allowed) = &allowed {
                        let inside = allowed.iter().any(|r| geo::contains(r, rec.true_pos));
                        if !inside {
                            let mut dist = f64::INFINITY;
                            for r in allowed {
                                dist = dist.min(-geo::penetration_depth(
                                    &r.polygon,
                                    rec.true_pos.east_m,
                                    rec.true_pos.north_m,
                                ));
                            }
                            out.push(Essence {
                                monitor_id: id.clone(),
                                t_s: rec.t_s,
                                drone_ids: vec![drone.clone()],
                                measured: dist,
                                threshold: 0.0,
                                unit: "m".into(),
                            });
                        }
                    }
                }
            }
            MonitorSpec::DriftBound {
                absolute_m,
                fraction,
                wind_gate_mps,
            } => {
                for cfg in &s.drones {
                    let mission = &s.missions[&cfg.id];
                    let mut raw = Vec::new();
                    let (threshold, unit) = match (absolute_m, fraction) {
                        (Some(a), _) => (*a, "m"),
                        (None, Some(f)) => (*f, "fraction"),
                        (None, None) => continue,
                    };
                    for r in run
                        .telemetry
                        .iter()
                        .filter(|r| r.drone_id == cfg.id && r.mode == Mode::Mission)
                    {
                        if r.true_pos.up_m <= AIRBORNE {
                            continue;
                        }
                        if let Some(gate) = wind_gate_mps {
                            let w = (r.wind_enu.east_m * r.wind_enu.east_m
                                + r.wind_enu.north_m * r.wind_enu.north_m)
                                .sqrt();
                            if w < *gate {
                                continue;
                            }
                        }
                        let deviation = brute_deviation(s, cfg, mission, r.true_pos);
                        let Some(deviation) = deviation else { continue };
                        let value = if fraction.is_some() {
                            match mission {
                                Mission::Circle { radius_m, .. } => deviation / radius_m,
                                _ => continue,
                            }
                        } else {
                            deviation
                        };
                        if value > threshold {
                            raw.push(RawBreach {
                                t_s: r.t_s,
                                measured: value,
                            });
                        }
                    }
                    for (t0, m) in merged(raw, dt, true) {
                        out.push(Essence {
                            monitor_id: id.clone(),
                            t_s: t0,
                            drone_ids: vec![cfg.id.clone()],
                            measured: m,
                            threshold,
                            unit: unit.into(),
                        });
                    }
                }
            }
            MonitorSpec::WaypointReach { tolerance_m } => {
                for cfg in &s.drones {
                    let mission = &s.missions[&cfg.id];
                    let Ok(wps) = skysim::vehicle::expand_mission(mission, s.origin) else {
                        continue;
                    };
                    let records: Vec<&TelemetryRecord> = run
                        .telemetry
                        .iter()
                        .filter(|r| r.drone_id == cfg.id)
                        .collect();
                    if records.is_empty() {
                        continue;
                    }
                    let threshold = tolerance_m + cfg.accept_radius_m;
                    for wp in &wps {
                        let mut best = f64::INFINITY;
                        let mut best_t = records[0].t_s;
                        for r in &records {
                            let d = geo::horizontal_distance(r.true_pos, *wp);
                            if d < best {
                                best = d;
                                best_t = r.t_s;
                            }
                        }
                        if best > threshold {
                            out.push(Essence {
                                monitor_id: id.clone(),
                                t_s: best_t,
                                drone_ids: vec![cfg.id.clone()],
                                measured: best,
                                threshold,
                                unit: "m".into(),
                            });
                        }
                    }
                }
            }
            MonitorSpec::DurationBound { baseline_s, factor } => {
                let bound = baseline_s * factor;
                for cfg in &s.drones {
                    let Some(outcome) = run.outcomes.get(&cfg.id) else {
                        continue;
                    };
                    if outcome.completed && outcome.duration_s <= bound {
                        continue;
                    }
                    out.push(Essence {
                        monitor_id: id.clone(),
                        t_s: run.duration_s,
                        drone_ids: vec![cfg.id.clone()],
                        measured: if outcome.completed {
                            outcome.duration_s
                        } else {
                            s.sim.max_duration_s
                        },
                        threshold: bound,
                        unit: "s".into(),
                    });
                }
            }
        }
        out.sort_by(|a, b| {
            a.t_s
                .partial_cmp(&b.t_s)
                .unwrap()
                .then_with(|| a.drone_ids.cmp(&b.drone_ids))
        });
        all.extend(out);
    }
    all
}

fn brute_deviation(
    s: &Scenario,
    cfg: &DroneConfig,
    mission: &Mission,
    pos: EnuPoint,
) -> Option<f64> {
    match mission {
        Mission::Circle {
            center, radius_m, ..
        } => {
            let c = geo::to_enu(s.origin, *center).ok()?;
            Some((geo::horizontal_distance(pos, c) - radius_m).abs())
        }
        _ => {
            let home = geo::to_enu(s.origin, cfg.home).ok()?;
            let wps = skysim::vehicle::expand_mission(mission, s.origin).ok()?;
            let first = wps.first()?;
            let mut prev = EnuPoint::new(home.east_m, home.north_m, first.up_m);
            let mut best = f64::INFINITY;
            for wp in &wps {
                if geo::horizontal_distance(prev, *wp) > 0.0 {
                    if let Ok(d) = geo::cross_track(pos, prev, *wp) {
                        best = best.min(d);
                    }
                }
                prev = *wp;
            }
            if best.is_finite() {
                Some(best)
            } else {
                None
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Random scenario and telemetry generation
// ---------------------------------------------------------------------------

/// A regular or star polygon: always simple, concave half the time.
fn random_polygon(rng: &mut StdRng, cx: f64, cy: f64) -> Vec<EnuPoint> {
    let n = rng.random_range(3..9usize);
    let base: f64 = rng.random_range(20.0..80.0);
    let star = rng.random_bool(0.5);
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (0..n)
        .map(|k| {
            let theta = phase + std::f64::consts::TAU * k as f64 / n as f64;
            let r = if star && k % 2 == 0 { base * 0.45 } else { base };
            EnuPoint::new(cx + r * theta.cos(), cy + r * theta.sin(), 0.0)
        })
        .collect()
}

/// Builds a random (scenario, run) pair: up to 3 drones, up to 200 ticks of
/// random-walk telemetry, random regions, and monitors of every kind with
/// random thresholds.
pub fn random_case(seed: u64) -> (Scenario, RunResult) {
    let mut rng = StdRng::seed_from_u64(seed);
    let origin = GeoPoint::new(42.207762, -86.393095, 0.0);
    let n_drones = rng.random_range(1..=3usize);
    let n_ticks = rng.random_range(10..=200usize);
    let dt = 0.1;

    let mut regions = Vec::new();
    for i in 0..rng.random_range(1..=3usize) {
        let cx = rng.random_range(-150.0..150.0);
        let cy = rng.random_range(-150.0..150.0);
        let polygon = random_polygon(&mut rng, cx, cy);
        let vertices = polygon
            .iter()
            .map(|p| {
                let g = geo::to_lla(origin, *p).unwrap();
                GeoPoint::new(g.lat_deg, g.lon_deg, 0.0)
            })
            .collect();
        regions.push(skysim::scenario::RegionSpec {
            id: format!("R{i}"),
            vertices,
            alt_floor_m: 0.0,
            alt_ceiling_m: if rng.random_bool(0.8) { 120.0 } else { 25.0 },
            polygon_enu: polygon,
        });
    }
    let region_ids: Vec<String> = regions.iter().map(|r| r.id.clone()).collect();

    let mut drones = Vec::new();
    let mut missions = BTreeMap::new();
    let all_circles = rng.random_bool(0.5);
    for i in 0..n_drones {
        let id = format!("D{i}");
        let home_enu = EnuPoint::new(
            rng.random_range(-100.0..100.0),
            rng.random_range(-100.0..100.0),
            0.0,
        );
        let home = geo::to_lla(origin, home_enu).unwrap();
        drones.push(DroneConfig {
            id: id.clone(),
            home,
            max_airspeed_mps: 13.0,
            cruise_speed_mps: 10.0,
            climb_rate_mps: 2.0,
            descent_rate_mps: 1.5,
            accept_radius_m: rng.random_range(0.5..3.0),
            rtl_alt_m: 30.0,
        });
        let mission = if all_circles {
            let c = geo::to_lla(
                origin,
                EnuPoint::new(rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0), 0.0),
            )
            .unwrap();
            Mission::Circle {
                center: c,
                radius_m: rng.random_range(30.0..120.0),
                alt_m: 30.0,
                speed_mps: 8.0,
                laps: 1,
            }
        } else {
            let k = rng.random_range(1..5usize);
            Mission::Waypoints {
                waypoints: (0..k)
                    .map(|_| {
                        let p = EnuPoint::new(
                            rng.random_range(-150.0..150.0),
                            rng.random_range(-150.0..150.0),
                            rng.random_range(10.0..60.0),
                        );
                        geo::to_lla(origin, p).unwrap()
                    })
                    .collect(),
            }
        };
        missions.insert(id, mission);
    }

    let mut monitors = vec![
        MonitorSpec::MinSeparation {
            min_m: rng.random_range(2.0..25.0),
            mode_filter: if rng.random_bool(0.3) {
                Some(Mode::Mission)
            } else {
                None
            },
        },
        MonitorSpec::NoFlyZone {
            region_ids: region_ids.clone(),
        },
        MonitorSpec::WaypointReach {
            tolerance_m: rng.random_range(0.5..40.0),
        },
        MonitorSpec::DurationBound {
            baseline_s: rng.random_range(1.0..30.0),
            factor: 1.25,
        },
    ];
    if rng.random_bool(0.5) {
        monitors.push(MonitorSpec::SafeLanding {
            allowed_region_ids: None,
            forbidden_region_ids: Some(region_ids.clone()),
        });
    } else {
        monitors.push(MonitorSpec::SafeLanding {
            allowed_region_ids: Some(region_ids.clone()),
            forbidden_region_ids: None,
        });
    }
    monitors.push(MonitorSpec::DriftBound {
        absolute_m: if all_circles { None } else { Some(rng.random_range(5.0..40.0)) },
        fraction: if all_circles { Some(rng.random_range(0.05..0.5)) } else { None },
        wind_gate_mps: if rng.random_bool(0.4) {
            Some(rng.random_range(0.0..8.0))
        } else {
            None
        },
    });

    let scenario = Scenario {
        format_version: "1".into(),
        name: format!("random-{seed}"),
        origin,
        regions,
        weather: Weather::default(),
        gps: GpsConfig::default(),
        comms: vec![],
        interventions: vec![],
        drones,
        missions,
        monitors: monitors.clone(),
        fuzz: None,
        sim: SimParams {
            dt_s: dt,
            max_duration_s: n_ticks as f64 * dt + 1.0,
            seed,
            rtl_comms_timeout_s: 5.0,
        },
    };

    // Random-walk telemetry: modes wander through the state machine-ish
    // values, positions random-walk in 3D, wind varies per tick.
    let mut telemetry = Vec::new();
    let mut positions: Vec<EnuPoint> = scenario
        .drones
        .iter()
        .map(|d| geo::to_enu(origin, d.home).unwrap())
        .collect();
    let mode_pool = [
        Mode::Takeoff,
        Mode::Mission,
        Mode::Mission,
        Mode::Mission,
        Mode::Loiter,
        Mode::Rtl,
        Mode::Land,
        Mode::Landed,
    ];
    let mut modes: Vec<Mode> = (0..n_drones).map(|_| Mode::Takeoff).collect();
    for tick in 0..n_ticks {
        let t = tick as f64 * dt;
        for d in 0..n_drones {
            if rng.random_bool(0.05) {
                modes[d] = mode_pool[rng.random_range(0..mode_pool.len())];
            }
            let p = &mut positions[d];
            p.east_m += rng.random_range(-3.0..3.0);
            p.north_m += rng.random_range(-3.0..3.0);
            p.up_m = (p.up_m + rng.random_range(-2.0..3.0)).clamp(0.0, 80.0);
            let wind = EnuPoint::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                0.0,
            );
            telemetry.push(TelemetryRecord {
                t_s: t,
                drone_id: format!("D{d}"),
                true_pos: *p,
                perceived_pos: *p,
                gps_valid: rng.random_bool(0.9),
                velocity_enu: EnuPoint::new(0.0, 0.0, 0.0),
                mode: modes[d],
                comms_ok: true,
                wind_enu: wind,
            });
        }
    }

    let outcomes: BTreeMap<String, DroneOutcome> = (0..n_drones)
        .map(|d| {
            (
                format!("D{d}"),
                DroneOutcome {
                    completed: rng.random_bool(0.6),
                    landed_pos: positions[d],
                    duration_s: rng.random_range(1.0..(n_ticks as f64 * dt).max(1.5)),
                    distance_flown_m: 0.0,
                },
            )
        })
        .collect();

    let run = RunResult {
        telemetry,
        rejected_interventions: vec![],
        outcomes,
        terminated_by: Termination::MaxDuration,
        duration_s: (n_ticks.saturating_sub(1)) as f64 * dt,
        dt_s: dt,
    };

    (scenario, run)
}

/// Quick status helper for sweep assertions.
pub fn status_of(verdict: &Verdict) -> Status {
    verdict.status
}
