//! Environment models sampled by the simulation loop: the wind field, the
//! GPS accuracy/noise model, and communication availability.
//!
//! All stochastic draws come from an explicit caller-owned RNG stream, so a
//! run is reproducible bit-for-bit from its seed.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::geo::{self, EnuPoint};
use crate::scenario::{CommsLossWindow, GpsConfig, WindLayer};

/// Instantaneous air-mass motion at a point, ENU m/s. Horizontal only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindSample {
    pub velocity_enu: EnuPoint,
}

impl WindSample {
    pub const ZERO: WindSample = WindSample {
        velocity_enu: EnuPoint {
            east_m: 0.0,
            north_m: 0.0,
            up_m: 0.0,
        },
    };

    pub fn speed(&self) -> f64 {
        let v = self.velocity_enu;
        (v.east_m * v.east_m + v.north_m * v.north_m).sqrt()
    }
}

/// One GPS position estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpsFix {
    pub perceived: EnuPoint,
    /// False inside a dead spot: `perceived` is then the dead-reckoned
    /// estimate, not a measurement.
    pub valid: bool,
    pub sigma_m: f64,
}

/// Samples the wind at an altitude and time. Selects the layer whose
/// `[alt_lower, alt_upper)` band contains `alt_m`; instantaneous speed is
/// the stable speed plus a uniform fraction of the gust amplitude, redrawn
/// on every call. The returned velocity points TOWARD the direction the
/// wind blows (the layer's `direction_deg` names where it blows FROM).
/// Zero wind if no layer covers the altitude.
pub fn wind_at<R: Rng>(
    layers: &[WindLayer],
    alt_m: f64,
    _t_s: f64,
    rng: &mut R,
) -> WindSample {
    let layer = match layers
        .iter()
        .find(|l| alt_m >= l.alt_lower_m && alt_m < l.alt_upper_m)
    {
        Some(l) => l,
        None => return WindSample::ZERO,
    };
    let speed = if layer.gust_mps > 0.0 {
        layer.speed_mps + rng.random::<f64>() * layer.gust_mps
    } else {
        layer.speed_mps
    };
    // Blowing-toward bearing, clockwise from north.
    let toward = (layer.direction_deg + 180.0).to_radians();
    WindSample {
        velocity_enu: EnuPoint::new(speed * toward.sin(), speed * toward.cos(), 0.0),
    }
}

/// Horizontal position accuracy (1-sigma, meters) implied by a GPS
/// configuration.
///
/// With a satellite count: 2 m at 15 or more satellites, doubling every two
/// satellites lost below that. Below 4 satellites no fix is possible at all
/// (`None`) and the whole flight behaves as a dead spot. With a deprivation
/// percentage: linear from 2 m at 0% to 50 m at 100%.
pub fn gps_sigma(g: &GpsConfig) -> Option<f64> {
    if let Some(s) = g.satellites {
        if s < 4 {
            return None;
        }
        if s >= 15 {
            return Some(2.0);
        }
        return Some(2.0 * 2f64.powf((15 - s) as f64 / 2.0));
    }
    let d = g.deprivation_pct.unwrap_or(0.0);
    Some(2.0 + 0.48 * d)
}

/// Produces the GPS fix for one tick.
///
/// Outside a dead spot the fix is the true position plus independent
/// horizontal Gaussian noise of the given sigma (vertical is exact). Inside
/// a dead spot the estimate dead-reckons from the previous fix using the
/// drone's own velocity estimate, so error accumulates for as long as the
/// outage lasts.
pub fn perceived_position<R: Rng>(
    true_pos: EnuPoint,
    sigma_m: f64,
    in_dead_spot: bool,
    last_fix: &GpsFix,
    velocity: EnuPoint,
    dt_s: f64,
    rng: &mut R,
) -> GpsFix {
    if in_dead_spot {
        return GpsFix {
            perceived: EnuPoint::new(
                last_fix.perceived.east_m + velocity.east_m * dt_s,
                last_fix.perceived.north_m + velocity.north_m * dt_s,
                last_fix.perceived.up_m + velocity.up_m * dt_s,
            ),
            valid: false,
            sigma_m,
        };
    }
    let perceived = if sigma_m > 0.0 {
        let normal = Normal::new(0.0, sigma_m).expect("sigma is finite and non-negative");
        let ne = normal.sample(rng);
        let nn = normal.sample(rng);
        EnuPoint::new(true_pos.east_m + ne, true_pos.north_m + nn, true_pos.up_m)
    } else {
        true_pos
    };
    GpsFix {
        perceived,
        valid: true,
        sigma_m,
    }
}

/// True iff the drone has a command link at time `t_s`. Windows are
/// half-open `[start, start + duration)`: a query exactly at a window's end
/// is connected.
pub fn comms_ok(windows: &[CommsLossWindow], drone_id: &str, t_s: f64) -> bool {
    !windows.iter().any(|w| {
        w.drone_ids.iter().any(|id| id == drone_id)
            && t_s >= w.start_s
            && t_s < w.start_s + w.duration_s
    })
}

/// True iff the true position is inside any of the configured dead-spot
/// regions.
pub fn in_dead_spot(dead_spots: &[geo::Region], true_pos: EnuPoint) -> bool {
    dead_spots.iter().any(|r| geo::contains(r, true_pos))
}
