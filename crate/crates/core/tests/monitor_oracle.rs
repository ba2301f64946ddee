//! Monitor engine vs the brute-force reference checker, plus the
//! closed-form separation crossing-time check.

mod support;

use support::brute::{brute_evaluate, essences, random_case};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use skysim::engine::{RunResult, TelemetryRecord, Termination};
use skysim::geo::EnuPoint;
use skysim::monitors::{check_separation, evaluate};
use skysim::vehicle::Mode;

#[test]
fn monitor_engine_matches_brute_force_on_random_cases() {
    for seed in 0..100u64 {
        let (scenario, run) = random_case(seed);
        let verdict = evaluate(&scenario.monitors, &run, &scenario);
        let reference = brute_evaluate(&scenario.monitors, &run, &scenario);
        assert_eq!(
            essences(&verdict),
            reference,
            "violation sets diverged on random case {seed}"
        );
    }
}

/// Tightening a threshold makes more ticks breach. Adjacent episodes can
/// merge into one, so the episode count may drop — but no monitor that
/// violated may become clean, and the earliest breach can only move earlier.
#[test]
fn tightening_thresholds_never_clears_a_violation() {
    for seed in 0..20u64 {
        let (mut scenario, run) = random_case(seed);
        let before = evaluate(&scenario.monitors, &run, &scenario);
        for m in &mut scenario.monitors {
            match m {
                skysim::scenario::MonitorSpec::MinSeparation { min_m, .. } => *min_m *= 1.5,
                skysim::scenario::MonitorSpec::DriftBound {
                    absolute_m,
                    fraction,
                    ..
                } => {
                    if let Some(a) = absolute_m {
                        *a *= 0.5;
                    }
                    if let Some(f) = fraction {
                        *f *= 0.5;
                    }
                }
                skysim::scenario::MonitorSpec::WaypointReach { tolerance_m } => {
                    *tolerance_m *= 0.5;
                }
                skysim::scenario::MonitorSpec::DurationBound { baseline_s, .. } => {
                    *baseline_s *= 0.5;
                }
                _ => {}
            }
        }
        let after = evaluate(&scenario.monitors, &run, &scenario);
        for v in &before.violations {
            let earliest_after = after
                .violations
                .iter()
                .filter(|w| w.monitor_id == v.monitor_id && w.drone_ids == v.drone_ids)
                .map(|w| w.t_s)
                .fold(f64::INFINITY, f64::min);
            assert!(
                earliest_after <= v.t_s + 1e-9,
                "case {seed}: {} on {:?} vanished or started later ({} vs {})",
                v.monitor_id,
                v.drone_ids,
                earliest_after,
                v.t_s
            );
        }
    }
}

#[test]
fn monitors_are_pure() {
    let (scenario, run) = random_case(7);
    let a = evaluate(&scenario.monitors, &run, &scenario);
    let b = evaluate(&scenario.monitors, &run, &scenario);
    assert_eq!(a, b);
}

fn straight_line_telemetry(
    p1: EnuPoint,
    v1: (f64, f64),
    p2: EnuPoint,
    v2: (f64, f64),
    dt: f64,
    ticks: usize,
) -> Vec<TelemetryRecord> {
    let mut telemetry = Vec::new();
    for i in 0..ticks {
        let t = i as f64 * dt;
        for (id, p, v) in [("A", p1, v1), ("B", p2, v2)] {
            telemetry.push(TelemetryRecord {
                t_s: t,
                drone_id: id.to_string(),
                true_pos: EnuPoint::new(p.east_m + v.0 * t, p.north_m + v.1 * t, p.up_m),
                perceived_pos: EnuPoint::new(p.east_m + v.0 * t, p.north_m + v.1 * t, p.up_m),
                gps_valid: true,
                velocity_enu: EnuPoint::new(v.0, v.1, 0.0),
                mode: Mode::Mission,
                comms_ok: true,
                wind_enu: EnuPoint::new(0.0, 0.0, 0.0),
            });
        }
    }
    telemetry
}

/// First breach time of |(Δp) + (Δv)·t| < min — smallest positive root of
/// the corresponding quadratic.
fn analytic_crossing(dp: (f64, f64), dv: (f64, f64), min_m: f64) -> Option<f64> {
    let a = dv.0 * dv.0 + dv.1 * dv.1;
    let b = 2.0 * (dp.0 * dv.0 + dp.1 * dv.1);
    let c = dp.0 * dp.0 + dp.1 * dp.1 - min_m * min_m;
    if a == 0.0 {
        return None;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / (2.0 * a);
    (t > 0.0).then_some(t)
}

#[test]
fn separation_first_violation_matches_closed_form_crossing() {
    let dt = 0.1;
    let mut rng = StdRng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 20 {
        // Two drones approach head-on-ish from a comfortable distance.
        let offset: f64 = rng.random_range(120.0..300.0);
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let p1 = EnuPoint::new(0.0, 0.0, 30.0);
        let p2 = EnuPoint::new(offset * angle.cos(), offset * angle.sin(), 30.0);
        let speed1: f64 = rng.random_range(5.0..14.0);
        let speed2: f64 = rng.random_range(5.0..14.0);
        // Drone A flies toward B's start, B flies toward A's start.
        let v1 = (angle.cos() * speed1, angle.sin() * speed1);
        let v2 = (-angle.cos() * speed2, -angle.sin() * speed2);
        let min_m = rng.random_range(8.0..20.0);

        let dp = (p2.east_m - p1.east_m, p2.north_m - p1.north_m);
        let dv = (v2.0 - v1.0, v2.1 - v1.1);
        let Some(t_star) = analytic_crossing(dp, dv, min_m) else {
            continue;
        };
        let ticks = ((t_star + 5.0) / dt) as usize;
        let telemetry = straight_line_telemetry(p1, v1, p2, v2, dt, ticks);
        let violations = check_separation(&telemetry, dt, min_m, None, "sep#0");
        assert!(
            !violations.is_empty(),
            "no violation found for geometry with crossing at {t_star:.3}"
        );
        let first = violations[0].t_s;
        assert!(
            (first - t_star).abs() <= dt + 1e-9,
            "first violation at {first:.3} vs analytic {t_star:.3}"
        );
        checked += 1;
    }
}

#[test]
fn verdict_failed_iff_violations_nonempty() {
    for seed in 0..30u64 {
        let (scenario, run) = random_case(seed);
        let verdict = evaluate(&scenario.monitors, &run, &scenario);
        assert_eq!(
            verdict.status == skysim::monitors::Status::Failed,
            !verdict.violations.is_empty()
        );
    }
}

#[test]
fn brute_force_agrees_on_empty_run() {
    let (scenario, _) = random_case(3);
    let run = RunResult {
        telemetry: vec![],
        rejected_interventions: vec![],
        outcomes: Default::default(),
        terminated_by: Termination::AllLanded,
        duration_s: 0.0,
        dt_s: 0.1,
    };
    let verdict = evaluate(&scenario.monitors, &run, &scenario);
    let reference = brute_evaluate(&scenario.monitors, &run, &scenario);
    assert_eq!(essences(&verdict), reference);
}
