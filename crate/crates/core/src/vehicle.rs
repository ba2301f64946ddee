//! Kinematic vehicle model: mission expansion, pure-pursuit guidance, mode
//! state machine, and failsafe behavior.
//!
//! The model is a point mass with an airspeed cap and no inertia. Guidance
//! aims at the active target from the PERCEIVED position with no wind
//! feed-forward, so wind and GPS degradation show up as measurable path
//! deviation instead of being silently compensated. Ground velocity is the
//! commanded airspeed plus the wind vector.

use std::fmt;

use crate::geo::{self, EnuPoint, GeoPoint};
use crate::scenario::{DroneConfig, InterventionCommand, InterventionEvent, Mission};
use crate::world::{GpsFix, WindSample};

/// Flight mode. Transitions are restricted to:
/// IDLE→TAKEOFF→MISSION; TAKEOFF→RTL (failsafe or command);
/// MISSION→{LOITER, RTL, LAND}; LOITER→{MISSION, RTL, LAND}; RTL→LAND;
/// LAND→LANDED; LANDED is absorbing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mode {
    Idle,
    Takeoff,
    Mission,
    Loiter,
    Rtl,
    Land,
    Landed,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Idle => "IDLE",
            Mode::Takeoff => "TAKEOFF",
            Mode::Mission => "MISSION",
            Mode::Loiter => "LOITER",
            Mode::Rtl => "RTL",
            Mode::Land => "LAND",
            Mode::Landed => "LANDED",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "IDLE" => Ok(Mode::Idle),
            "TAKEOFF" => Ok(Mode::Takeoff),
            "MISSION" => Ok(Mode::Mission),
            "LOITER" => Ok(Mode::Loiter),
            "RTL" => Ok(Mode::Rtl),
            "LAND" => Ok(Mode::Land),
            "LANDED" => Ok(Mode::Landed),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

/// True iff `from → to` is in the mode transition table.
pub fn transition_allowed(from: Mode, to: Mode) -> bool {
    use Mode::*;
    matches!(
        (from, to),
        (Idle, Takeoff)
            | (Takeoff, Mission)
            | (Takeoff, Rtl)
            | (Mission, Loiter)
            | (Mission, Rtl)
            | (Mission, Land)
            | (Loiter, Mission)
            | (Loiter, Rtl)
            | (Loiter, Land)
            | (Rtl, Land)
            | (Land, Landed)
    )
}

/// Per-drone parameters prepared for simulation: the scenario's drone config
/// with everything converted to the local frame, plus the expanded waypoint
/// list and the effective mission speed.
#[derive(Debug, Clone, PartialEq)]
pub struct DroneParams {
    pub id: String,
    pub home_enu: EnuPoint,
    pub max_airspeed_mps: f64,
    /// Commanded speed for guidance: the mission's speed when it has one
    /// (circle/square), otherwise the drone's cruise speed. Never exceeds
    /// `max_airspeed_mps`.
    pub cruise_mps: f64,
    pub climb_rate_mps: f64,
    pub descent_rate_mps: f64,
    pub accept_radius_m: f64,
    pub rtl_alt_m: f64,
    pub waypoints: Vec<EnuPoint>,
}

impl DroneParams {
    pub fn prepare(
        cfg: &DroneConfig,
        mission: &Mission,
        origin: GeoPoint,
    ) -> Result<Self, geo::GeoError> {
        let home_enu = geo::to_enu(origin, cfg.home)?;
        let waypoints = expand_mission(mission, origin)?;
        let cruise = mission
            .speed_mps()
            .unwrap_or(cfg.cruise_speed_mps)
            .min(cfg.max_airspeed_mps);
        Ok(Self {
            id: cfg.id.clone(),
            home_enu,
            max_airspeed_mps: cfg.max_airspeed_mps,
            cruise_mps: cruise,
            climb_rate_mps: cfg.climb_rate_mps,
            descent_rate_mps: cfg.descent_rate_mps,
            accept_radius_m: cfg.accept_radius_m,
            rtl_alt_m: cfg.rtl_alt_m,
            waypoints,
        })
    }

    fn takeoff_alt(&self) -> f64 {
        self.waypoints.first().map_or(self.rtl_alt_m, |w| w.up_m)
    }
}

/// Full vehicle state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DroneState {
    pub t_s: f64,
    pub true_pos: EnuPoint,
    pub fix: GpsFix,
    /// Ground velocity applied over the tick that produced this state.
    pub velocity_enu: EnuPoint,
    /// The drone's own velocity estimate (commanded airspeed), used for dead
    /// reckoning during GPS outages.
    pub airspeed_cmd: EnuPoint,
    pub mode: Mode,
    pub wp_index: usize,
    pub comms_ok: bool,
    pub comms_lost_since: Option<f64>,
}

impl DroneState {
    /// A drone resting at its home position, ready for the IDLE→TAKEOFF
    /// transition at t = 0.
    pub fn at_home(params: &DroneParams) -> Self {
        let zero = EnuPoint::new(0.0, 0.0, 0.0);
        Self {
            t_s: 0.0,
            true_pos: params.home_enu,
            fix: GpsFix {
                perceived: params.home_enu,
                valid: true,
                sigma_m: 0.0,
            },
            velocity_enu: zero,
            airspeed_cmd: zero,
            mode: Mode::Idle,
            wp_index: 0,
            comms_ok: true,
            comms_lost_since: None,
        }
    }

    pub fn airborne(&self) -> bool {
        self.true_pos.up_m > 1.0
    }
}

/// Expands a mission into the ENU waypoint sequence the vehicle flies.
///
/// Waypoint missions pass through unchanged (converted to ENU). Circles are
/// sampled every 10° — 36 points per lap — starting at bearing 0° from the
/// center and proceeding counterclockwise. Squares expand to their four
/// corners (counterclockwise from the northeast corner) plus a closing
/// repeat of the first corner.
pub fn expand_mission(m: &Mission, origin: GeoPoint) -> Result<Vec<EnuPoint>, geo::GeoError> {
    match m {
        Mission::Waypoints { waypoints } => {
            waypoints.iter().map(|w| geo::to_enu(origin, *w)).collect()
        }
        Mission::Circle {
            center,
            radius_m,
            alt_m,
            laps,
            ..
        } => {
            let c = geo::to_enu(origin, *center)?;
            let n = 36usize * (*laps as usize);
            Ok((0..n)
                .map(|k| {
                    let bearing = (-(10.0 * k as f64)).to_radians();
                    EnuPoint::new(
                        c.east_m + radius_m * bearing.sin(),
                        c.north_m + radius_m * bearing.cos(),
                        *alt_m,
                    )
                })
                .collect())
        }
        Mission::Square {
            center,
            side_m,
            alt_m,
            ..
        } => {
            let c = geo::to_enu(origin, *center)?;
            let h = side_m / 2.0;
            let corners = [(h, h), (-h, h), (-h, -h), (h, -h), (h, h)];
            Ok(corners
                .iter()
                .map(|(de, dn)| EnuPoint::new(c.east_m + de, c.north_m + dn, *alt_m))
                .collect())
        }
    }
}

fn guidance_command(
    target: EnuPoint,
    from: EnuPoint,
    cruise: f64,
    climb: f64,
    descent: f64,
    dt: f64,
) -> EnuPoint {
    let de = target.east_m - from.east_m;
    let dn = target.north_m - from.north_m;
    let du = target.up_m - from.up_m;
    let dist = (de * de + dn * dn + du * du).sqrt();
    if dist <= f64::EPSILON {
        return EnuPoint::new(0.0, 0.0, 0.0);
    }
    let speed = cruise.min(dist / dt);
    let scale = speed / dist;
    let mut v = EnuPoint::new(de * scale, dn * scale, du * scale);
    v.up_m = v.up_m.clamp(-descent, climb);
    v
}

/// Advances one drone by one tick of `dt_s` seconds.
///
/// Mode transitions driven by position (takeoff complete, waypoint
/// acceptance, home reached, touchdown) are decided first from the given
/// fix; the commanded airspeed then points at the active target and the true
/// position integrates commanded airspeed plus wind. The returned state
/// carries the mode decided at the START of the tick and the velocities
/// applied over it.
pub fn step(
    state: &DroneState,
    params: &DroneParams,
    wind: &WindSample,
    fix: &GpsFix,
    dt_s: f64,
) -> DroneState {
    let mut next = state.clone();
    next.fix = *fix;

    // Position-driven transitions, chained until stable so that e.g. a
    // takeoff that completes exactly on a waypoint advances immediately.
    loop {
        let before = (next.mode, next.wp_index);
        match next.mode {
            Mode::Takeoff => {
                if fix.perceived.up_m >= params.takeoff_alt() - params.accept_radius_m {
                    next.mode = Mode::Mission;
                }
            }
            Mode::Mission => {
                while next.wp_index < params.waypoints.len()
                    && geo::horizontal_distance(fix.perceived, params.waypoints[next.wp_index])
                        < params.accept_radius_m
                {
                    next.wp_index += 1;
                }
                if next.wp_index >= params.waypoints.len() {
                    next.mode = Mode::Land;
                }
            }
            Mode::Rtl => {
                if geo::horizontal_distance(fix.perceived, params.home_enu)
                    < params.accept_radius_m
                {
                    next.mode = Mode::Land;
                }
            }
            Mode::Land => {
                if fix.perceived.up_m <= 0.01 {
                    next.mode = Mode::Landed;
                }
            }
            Mode::Idle | Mode::Loiter | Mode::Landed => {}
        }
        if (next.mode, next.wp_index) == before {
            break;
        }
    }

    // Guidance target for the tick.
    let target = match next.mode {
        Mode::Takeoff => Some(EnuPoint::new(
            params.home_enu.east_m,
            params.home_enu.north_m,
            params.takeoff_alt(),
        )),
        Mode::Mission => params.waypoints.get(next.wp_index).copied(),
        Mode::Rtl => Some(EnuPoint::new(
            params.home_enu.east_m,
            params.home_enu.north_m,
            params.rtl_alt_m,
        )),
        Mode::Land => Some(EnuPoint::new(
            fix.perceived.east_m,
            fix.perceived.north_m,
            0.0,
        )),
        Mode::Loiter | Mode::Idle | Mode::Landed => None,
    };

    let cmd = match target {
        Some(t) => guidance_command(
            t,
            fix.perceived,
            params.cruise_mps,
            params.climb_rate_mps,
            params.descent_rate_mps,
            dt_s,
        ),
        None => EnuPoint::new(0.0, 0.0, 0.0),
    };

    // A drone on the ground is not dragged by wind.
    let ground = if matches!(next.mode, Mode::Landed | Mode::Idle) {
        EnuPoint::new(0.0, 0.0, 0.0)
    } else {
        EnuPoint::new(
            cmd.east_m + wind.velocity_enu.east_m,
            cmd.north_m + wind.velocity_enu.north_m,
            cmd.up_m + wind.velocity_enu.up_m,
        )
    };

    next.airspeed_cmd = cmd;
    next.velocity_enu = ground;
    next.true_pos = EnuPoint::new(
        state.true_pos.east_m + ground.east_m * dt_s,
        state.true_pos.north_m + ground.north_m * dt_s,
        (state.true_pos.up_m + ground.up_m * dt_s).max(0.0),
    );
    next.t_s = state.t_s + dt_s;
    next
}

/// Applies the comms-loss failsafe rule: after `timeout_s` seconds of
/// continuous loss, a drone in TAKEOFF, MISSION or LOITER switches to RTL.
/// Restored comms before the timeout clears the pending failsafe; RTL is
/// never auto-reverted.
pub fn apply_failsafe(
    state: &mut DroneState,
    comms_ok_now: bool,
    timeout_s: f64,
    t_s: f64,
) {
    state.comms_ok = comms_ok_now;
    if comms_ok_now {
        state.comms_lost_since = None;
        return;
    }
    let since = *state.comms_lost_since.get_or_insert(t_s);
    if t_s - since >= timeout_s
        && matches!(state.mode, Mode::Mission | Mode::Loiter | Mode::Takeoff)
    {
        state.mode = Mode::Rtl;
    }
}

/// Why a scripted intervention did not apply.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RejectedIntervention {
    pub t_s: f64,
    pub drone_id: String,
    pub command: InterventionCommand,
    pub mode: Mode,
    pub reason: String,
}

/// Applies a scripted operator command. Commands that the mode transition
/// table disallows are recorded as rejected events, not errors.
pub fn apply_intervention(
    state: &mut DroneState,
    ev: &InterventionEvent,
) -> Option<RejectedIntervention> {
    let wanted = match ev.command {
        InterventionCommand::Rtl => Mode::Rtl,
        InterventionCommand::Land => Mode::Land,
        InterventionCommand::Loiter => Mode::Loiter,
        InterventionCommand::Resume => Mode::Mission,
    };
    // RESUME only continues a paused mission; the takeoff-complete edge of
    // the transition table is not an operator command.
    let allowed = if ev.command == InterventionCommand::Resume {
        state.mode == Mode::Loiter
    } else {
        transition_allowed(state.mode, wanted)
    };
    if allowed {
        state.mode = wanted;
        None
    } else {
        Some(RejectedIntervention {
            t_s: ev.t_s,
            drone_id: ev.drone_id.clone(),
            command: ev.command,
            mode: state.mode,
            reason: format!("{} not allowed from {}", ev.command_name(), state.mode),
        })
    }
}

impl InterventionEvent {
    fn command_name(&self) -> &'static str {
        match self.command {
            InterventionCommand::Rtl => "RTL",
            InterventionCommand::Land => "LAND",
            InterventionCommand::Loiter => "LOITER",
            InterventionCommand::Resume => "RESUME",
        }
    }
}
