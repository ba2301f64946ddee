//! Deterministic fixed-step simulation loop.
//!
//! One run is a pure function of (scenario, seed). Each drone owns its own
//! random stream, seeded from the run seed and the drone id, so adding a
//! drone to a scenario never perturbs the noise another drone sees. Within a
//! tick the drones advance in ascending id order.
//!
//! Tick structure at time t, per drone: evaluate the comms link, apply the
//! failsafe rule, apply interventions scheduled in [t, t+dt), sample wind at
//! the drone's altitude, compute the GPS fix (regions containing the true
//! position mask the signal), step the vehicle, and append one telemetry
//! record. The record carries the position AT time t and the mode/velocities
//! decided for the following dt.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geo::EnuPoint;
use crate::scenario::{validate, Diagnostic, Scenario, Severity};
use crate::vehicle::{
    self, apply_failsafe, apply_intervention, DroneParams, DroneState, Mode, RejectedIntervention,
};
use crate::world::{self, GpsFix, WindSample};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("INVALID_SCENARIO: {0} validation error(s)", .diagnostics.len())]
    InvalidScenario { diagnostics: Vec<Diagnostic> },
    #[error("scenario geometry error: {0}")]
    Geometry(#[from] crate::geo::GeoError),
}

/// One telemetry sample: everything the monitors and analytics consume.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRecord {
    pub t_s: f64,
    pub drone_id: String,
    pub true_pos: EnuPoint,
    pub perceived_pos: EnuPoint,
    pub gps_valid: bool,
    pub velocity_enu: EnuPoint,
    pub mode: Mode,
    pub comms_ok: bool,
    /// Wind sampled at the drone this tick (east, north); no vertical part.
    pub wind_enu: EnuPoint,
}

impl TelemetryRecord {
    pub fn wind_speed(&self) -> f64 {
        (self.wind_enu.east_m * self.wind_enu.east_m
            + self.wind_enu.north_m * self.wind_enu.north_m)
            .sqrt()
    }

    pub fn airborne(&self) -> bool {
        self.true_pos.up_m > 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Termination {
    AllLanded,
    MaxDuration,
}

/// Per-drone end-of-run summary.
#[derive(Debug, Clone, PartialEq)]
pub struct DroneOutcome {
    /// True iff the drone visited every waypoint and ended the run LANDED.
    pub completed: bool,
    pub landed_pos: EnuPoint,
    /// Time of touchdown, or the run duration if the drone never landed.
    pub duration_s: f64,
    pub distance_flown_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Ordered by (t_s, drone_id); one record per drone per tick.
    pub telemetry: Vec<TelemetryRecord>,
    pub rejected_interventions: Vec<RejectedIntervention>,
    pub outcomes: BTreeMap<String, DroneOutcome>,
    pub terminated_by: Termination,
    pub duration_s: f64,
    pub dt_s: f64,
}

/// Derives the random stream seed for one drone of one run.
///
/// FNV-1a over the drone id, xor'd with the run seed. Documented and stable:
/// replaying a scenario with the same seed reproduces every draw bit-for-bit.
pub fn drone_stream_seed(run_seed: u64, drone_id: &str) -> u64 {
    run_seed ^ fnv1a64(drone_id)
}

fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

struct DroneRuntime {
    params: DroneParams,
    state: DroneState,
    rng: ChaCha8Rng,
    distance_flown: f64,
    last_recorded_pos: Option<EnuPoint>,
    landed_at: Option<f64>,
}

/// Runs one scenario to completion. Requires a scenario free of
/// error-severity diagnostics.
pub fn simulate(s: &Scenario, seed: u64) -> Result<RunResult, SimError> {
    let diagnostics = validate(s);
    if diagnostics.iter().any(|d| d.severity == Severity::Error) {
        return Err(SimError::InvalidScenario { diagnostics });
    }

    let dt = s.sim.dt_s;
    let sigma = world::gps_sigma(&s.gps);
    let dead_spots = s.region_volumes(&s.gps.dead_spot_region_ids);

    let mut drones: Vec<DroneRuntime> = s
        .drones
        .iter()
        .map(|cfg| {
            let params = DroneParams::prepare(cfg, &s.missions[&cfg.id], s.origin)?;
            let state = DroneState::at_home(&params);
            let rng = ChaCha8Rng::seed_from_u64(drone_stream_seed(seed, &cfg.id));
            Ok(DroneRuntime {
                params,
                state,
                rng,
                distance_flown: 0.0,
                last_recorded_pos: None,
                landed_at: None,
            })
        })
        .collect::<Result<_, SimError>>()?;
    drones.sort_by(|a, b| a.params.id.cmp(&b.params.id));

    let mut telemetry = Vec::new();
    let mut rejected = Vec::new();
    let mut duration = 0.0;
    let terminated_by;
    let mut tick: u64 = 0;

    // Interventions map to tick indices up front: computing the window as
    // [t, t+dt) in floats lets an event on an exact tick boundary match two
    // adjacent ticks.
    let intervention_ticks: Vec<u64> = s
        .interventions
        .iter()
        .map(|ev| (ev.t_s / dt + 1e-9).floor() as u64)
        .collect();

    loop {
        let t = tick as f64 * dt;
        if t >= s.sim.max_duration_s {
            terminated_by = Termination::MaxDuration;
            break;
        }

        for d in drones.iter_mut() {
            if tick == 0 && d.state.mode == Mode::Idle {
                d.state.mode = Mode::Takeoff;
            }

            let link = world::comms_ok(&s.comms, &d.params.id, t);
            apply_failsafe(&mut d.state, link, s.sim.rtl_comms_timeout_s, t);

            for (ev, &ev_tick) in s.interventions.iter().zip(&intervention_ticks) {
                if ev_tick == tick && ev.drone_id == d.params.id {
                    if let Some(r) = apply_intervention(&mut d.state, ev) {
                        rejected.push(r);
                    }
                }
            }

            let wind = world::wind_at(&s.weather.layers, d.state.true_pos.up_m, t, &mut d.rng);
            let in_dead =
                sigma.is_none() || world::in_dead_spot(&dead_spots, d.state.true_pos);
            let fix = world::perceived_position(
                d.state.true_pos,
                sigma.unwrap_or(0.0),
                in_dead,
                &d.state.fix,
                d.state.airspeed_cmd,
                dt,
                &mut d.rng,
            );

            let pos_before = d.state.true_pos;
            let next = vehicle::step(&d.state, &d.params, &wind, &fix, dt);

            telemetry.push(TelemetryRecord {
                t_s: t,
                drone_id: d.params.id.clone(),
                true_pos: pos_before,
                perceived_pos: fix.perceived,
                gps_valid: fix.valid,
                velocity_enu: next.velocity_enu,
                mode: next.mode,
                comms_ok: link,
                wind_enu: EnuPoint::new(
                    wind.velocity_enu.east_m,
                    wind.velocity_enu.north_m,
                    0.0,
                ),
            });

            // Distance is summed between recorded positions so that it is
            // recomputable exactly from the telemetry file.
            if let Some(prev) = d.last_recorded_pos {
                let de = pos_before.east_m - prev.east_m;
                let dn = pos_before.north_m - prev.north_m;
                let du = pos_before.up_m - prev.up_m;
                d.distance_flown += (de * de + dn * dn + du * du).sqrt();
            }
            d.last_recorded_pos = Some(pos_before);
            if next.mode == Mode::Landed && d.landed_at.is_none() {
                d.landed_at = Some(t);
            }
            d.state = next;
        }

        duration = t;
        if drones.iter().all(|d| d.state.mode == Mode::Landed) {
            terminated_by = Termination::AllLanded;
            break;
        }
        tick += 1;
    }

    let outcomes = drones
        .iter()
        .map(|d| {
            let completed =
                d.state.wp_index >= d.params.waypoints.len() && d.state.mode == Mode::Landed;
            (
                d.params.id.clone(),
                DroneOutcome {
                    completed,
                    landed_pos: d.last_recorded_pos.unwrap_or(d.params.home_enu),
                    duration_s: d.landed_at.unwrap_or(duration),
                    distance_flown_m: d.distance_flown,
                },
            )
        })
        .collect();

    Ok(RunResult {
        telemetry,
        rejected_interventions: rejected,
        outcomes,
        terminated_by,
        duration_s: duration,
        dt_s: dt,
    })
}

// ---------------------------------------------------------------------------
// Telemetry CSV
// ---------------------------------------------------------------------------

pub const TELEMETRY_HEADER: &str = "t_s,drone_id,true_e,true_n,true_u,perc_e,perc_n,perc_u,\
gps_valid,vel_e,vel_n,vel_u,mode,comms_ok,wind_e,wind_n";

/// Writes the run's telemetry as CSV, one row per record, floats with six
/// decimal places. Returns the number of data rows written.
pub fn write_telemetry_csv<W: Write>(r: &RunResult, mut w: W) -> std::io::Result<usize> {
    writeln!(w, "{TELEMETRY_HEADER}")?;
    for rec in &r.telemetry {
        writeln!(
            w,
            "{:.6},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6},{:.6},{:.6},{},{},{:.6},{:.6}",
            rec.t_s,
            rec.drone_id,
            rec.true_pos.east_m,
            rec.true_pos.north_m,
            rec.true_pos.up_m,
            rec.perceived_pos.east_m,
            rec.perceived_pos.north_m,
            rec.perceived_pos.up_m,
            rec.gps_valid,
            rec.velocity_enu.east_m,
            rec.velocity_enu.north_m,
            rec.velocity_enu.up_m,
            rec.mode,
            rec.comms_ok,
            rec.wind_enu.east_m,
            rec.wind_enu.north_m,
        )?;
    }
    Ok(r.telemetry.len())
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("row {row}: expected {expected} columns, got {got}")]
    ColumnCount { row: usize, expected: usize, got: usize },
    #[error("row {row}: {message}")]
    Field { row: usize, message: String },
    #[error("row {row}: NONMONOTONE_TIME: timestamps must not decrease")]
    NonmonotoneTime { row: usize },
    #[error("header mismatch: expected {TELEMETRY_HEADER:?}")]
    Header,
    #[error("empty file: missing header row")]
    Empty,
}

/// Parses a telemetry CSV produced by [`write_telemetry_csv`]. Row numbers
/// in errors are 1-based file lines (the header is line 1).
pub fn read_telemetry_csv(text: &str) -> Result<Vec<TelemetryRecord>, CsvError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(CsvError::Empty)?;
    if header.trim_end() != TELEMETRY_HEADER {
        return Err(CsvError::Header);
    }

    let mut records = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (idx, line) in lines {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 16 {
            return Err(CsvError::ColumnCount {
                row,
                expected: 16,
                got: fields.len(),
            });
        }
        let f = |i: usize| -> Result<f64, CsvError> {
            fields[i].parse().map_err(|_| CsvError::Field {
                row,
                message: format!("bad numeric value {:?}", fields[i]),
            })
        };
        let b = |i: usize| -> Result<bool, CsvError> {
            fields[i].parse().map_err(|_| CsvError::Field {
                row,
                message: format!("bad boolean {:?}", fields[i]),
            })
        };
        let t_s = f(0)?;
        if t_s < last_t {
            return Err(CsvError::NonmonotoneTime { row });
        }
        last_t = t_s;
        let mode: Mode = fields[12].parse().map_err(|e| CsvError::Field {
            row,
            message: e,
        })?;
        records.push(TelemetryRecord {
            t_s,
            drone_id: fields[1].to_string(),
            true_pos: EnuPoint::new(f(2)?, f(3)?, f(4)?),
            perceived_pos: EnuPoint::new(f(5)?, f(6)?, f(7)?),
            gps_valid: b(8)?,
            velocity_enu: EnuPoint::new(f(9)?, f(10)?, f(11)?),
            mode,
            comms_ok: b(13)?,
            wind_enu: EnuPoint::new(f(14)?, f(15)?, 0.0),
        });
    }
    Ok(records)
}

/// Rebuilds per-drone outcomes from a telemetry trace, for offline checking
/// of logs produced elsewhere.
///
/// Completion is replayed with the same rule the vehicle used online:
/// waypoints are accepted in order whenever the PERCEIVED position passes
/// within the drone's accept radius on a MISSION or LAND record. A drone
/// completed iff that replay consumes every waypoint and the final record
/// is LANDED.
pub fn reconstruct_outcomes(
    telemetry: &[TelemetryRecord],
    s: &Scenario,
) -> Result<BTreeMap<String, DroneOutcome>, SimError> {
    let run_end = telemetry.last().map_or(0.0, |r| r.t_s);
    let mut outcomes = BTreeMap::new();
    for cfg in &s.drones {
        let params = DroneParams::prepare(cfg, &s.missions[&cfg.id], s.origin)?;
        let records: Vec<&TelemetryRecord> = telemetry
            .iter()
            .filter(|r| r.drone_id == cfg.id)
            .collect();
        let mut wp = 0usize;
        let mut landed_at = None;
        let mut distance = 0.0;
        let mut prev_pos: Option<EnuPoint> = None;
        for rec in &records {
            if matches!(rec.mode, Mode::Mission | Mode::Land) {
                while wp < params.waypoints.len()
                    && crate::geo::horizontal_distance(rec.perceived_pos, params.waypoints[wp])
                        < params.accept_radius_m
                {
                    wp += 1;
                }
            }
            if rec.mode == Mode::Landed && landed_at.is_none() {
                landed_at = Some(rec.t_s);
            }
            if let Some(p) = prev_pos {
                let de = rec.true_pos.east_m - p.east_m;
                let dn = rec.true_pos.north_m - p.north_m;
                let du = rec.true_pos.up_m - p.up_m;
                distance += (de * de + dn * dn + du * du).sqrt();
            }
            prev_pos = Some(rec.true_pos);
        }
        let final_mode = records.last().map(|r| r.mode);
        let completed = wp >= params.waypoints.len() && final_mode == Some(Mode::Landed);
        outcomes.insert(
            cfg.id.clone(),
            DroneOutcome {
                completed,
                landed_pos: records
                    .last()
                    .map_or(EnuPoint::new(0.0, 0.0, 0.0), |r| r.true_pos),
                duration_s: landed_at.unwrap_or(run_end),
                distance_flown_m: distance,
            },
        );
    }
    Ok(outcomes)
}

/// The wind sample type re-exported for monitor code that reads telemetry.
pub fn wind_sample_of(rec: &TelemetryRecord) -> WindSample {
    WindSample {
        velocity_enu: rec.wind_enu,
    }
}

/// Initial fix helper shared with offline reconstruction.
pub fn initial_fix(pos: EnuPoint) -> GpsFix {
    GpsFix {
        perceived: pos,
        valid: true,
        sigma_m: 0.0,
    }
}
