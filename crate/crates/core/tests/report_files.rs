//! Report emission properties: analytics in report.json are recomputable
//! from the shipped telemetry CSVs, and the path plots reflect the run
//! geometry.

mod support;

use std::collections::BTreeMap;

use support::{fixture_path, load_fixture};

use skysim::engine::{read_telemetry_csv, simulate};
use skysim::geo::EnuPoint;
use skysim::monitors::{drift_plan_for, evaluate};
use skysim::report::write_path_svg;
use skysim::scenario::resolve_param_path;
use skysim::vehicle::{expand_mission, Mode};

fn run_cli(args: &[&str]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_skysim"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn report_numbers_recompute_from_shipped_telemetry() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("report");
    let out = run_cli(&[
        "run",
        fixture_path("beach.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    let drone = &report["runs"][0]["drones"]["SAR1"];

    let csv = std::fs::read_to_string(out_dir.join("variant_0/telemetry.csv")).unwrap();
    let telemetry = read_telemetry_csv(&csv).unwrap();
    let s = load_fixture("beach.json");
    let plan = drift_plan_for(&s, "SAR1").unwrap();

    // Max/mean cross-track over MISSION records, as the report defines them.
    let devs: Vec<f64> = telemetry
        .iter()
        .filter(|r| r.mode == Mode::Mission)
        .map(|r| plan.deviation(r.true_pos))
        .collect();
    let max_ct = devs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_ct = devs.iter().sum::<f64>() / devs.len() as f64;
    assert!(
        (drone["max_cross_track_m"].as_f64().unwrap() - max_ct).abs() <= 1e-3 + 1e-4,
        "max_cross_track {} vs recomputed {}",
        drone["max_cross_track_m"],
        max_ct
    );
    assert!(
        (drone["mean_cross_track_m"].as_f64().unwrap() - mean_ct).abs() <= 1e-3 + 1e-4,
        "mean_cross_track {} vs recomputed {}",
        drone["mean_cross_track_m"],
        mean_ct
    );

    // Distance flown from position deltas plus the final tick's motion.
    let mut dist = 0.0;
    for pair in telemetry.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let de = b.true_pos.east_m - a.true_pos.east_m;
        let dn = b.true_pos.north_m - a.true_pos.north_m;
        let du = b.true_pos.up_m - a.true_pos.up_m;
        dist += (de * de + dn * dn + du * du).sqrt();
    }
    let reported = drone["distance_flown_m"].as_f64().unwrap();
    // CSV rounding is 1e-6 per coordinate; give the sum a proportional slack.
    let slack = 1e-3 + telemetry.len() as f64 * 3e-6;
    assert!(
        (reported - dist).abs() <= slack,
        "distance {reported} vs recomputed {dist} (slack {slack})"
    );

    // Landing position matches the final record.
    let last = telemetry.last().unwrap();
    assert!((drone["landed_e"].as_f64().unwrap() - last.true_pos.east_m).abs() <= 1e-3 + 1e-6);
    assert!((drone["landed_n"].as_f64().unwrap() - last.true_pos.north_m).abs() <= 1e-3 + 1e-6);
}

/// The recompute property also holds for a run cut off at max duration
/// (the blown-away variant of the wind sweep).
#[test]
fn report_numbers_recompute_for_incomplete_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("report");
    let out = run_cli(&[
        "run",
        fixture_path("circle_sweep_13.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    // Variant 2 is the wind-18 run: FAILED and never completed.
    let run2 = report["runs"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["variant"] == 2)
        .unwrap();
    assert_eq!(run2["verdict"]["status"], "FAILED");
    let drone = &run2["drones"]["CIR1"];
    assert_eq!(drone["completed"], false);

    let csv = std::fs::read_to_string(out_dir.join("variant_2/telemetry.csv")).unwrap();
    let telemetry = read_telemetry_csv(&csv).unwrap();
    let mut dist = 0.0;
    for pair in telemetry.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let de = b.true_pos.east_m - a.true_pos.east_m;
        let dn = b.true_pos.north_m - a.true_pos.north_m;
        let du = b.true_pos.up_m - a.true_pos.up_m;
        dist += (de * de + dn * dn + du * du).sqrt();
    }
    let slack = 1e-3 + telemetry.len() as f64 * 3e-6;
    let reported = drone["distance_flown_m"].as_f64().unwrap();
    assert!(
        (reported - dist).abs() <= slack,
        "distance {reported} vs recomputed {dist}"
    );
    let last = telemetry.last().unwrap();
    assert!((drone["landed_e"].as_f64().unwrap() - last.true_pos.east_m).abs() <= 1e-3 + 1e-6);
    assert!((drone["landed_u"].as_f64().unwrap() - last.true_pos.up_m).abs() <= 1e-3 + 1e-6);
}

/// A calm nominal run tracks the plan: the max deviation stays within the
/// accept radius plus a few sigma of GPS noise, and the mission completes.
#[test]
fn nominal_zero_wind_analytics_are_tight() {
    let mut s = load_fixture("beach.json");
    let h = resolve_param_path(&s, "weather.layers[0].speed").unwrap();
    h.write(&mut s, 0.0);
    let run = simulate(&s, s.sim.seed).unwrap();
    let verdict = evaluate(&s.monitors, &run, &s);
    let report = skysim::report::build_run_report(&run, &verdict, &s, 0, None, s.sim.seed);
    let d = &report.drones["SAR1"];
    assert!(d.completed);
    let sigma = 2.0;
    let bound = s.drones[0].accept_radius_m + 3.0 * sigma;
    assert!(
        d.max_cross_track_m <= bound,
        "max cross-track {} over {} in calm air",
        d.max_cross_track_m,
        bound
    );
    assert!(d.mean_cross_track_m <= d.max_cross_track_m);
}

/// One stationary sample: zero distance, and the deviation statistics
/// collapse to that single tick's value.
#[test]
fn single_stationary_tick_analytics() {
    let s = load_fixture("beach.json");
    let rec = skysim::engine::TelemetryRecord {
        t_s: 0.0,
        drone_id: "SAR1".into(),
        true_pos: EnuPoint::new(30.0, 0.0, 30.0),
        perceived_pos: EnuPoint::new(30.0, 0.0, 30.0),
        gps_valid: true,
        velocity_enu: EnuPoint::new(0.0, 0.0, 0.0),
        mode: Mode::Mission,
        comms_ok: true,
        wind_enu: EnuPoint::new(0.0, 0.0, 0.0),
    };
    let mut outcomes = BTreeMap::new();
    outcomes.insert(
        "SAR1".to_string(),
        skysim::engine::DroneOutcome {
            completed: false,
            landed_pos: rec.true_pos,
            duration_s: 0.0,
            distance_flown_m: 0.0,
        },
    );
    let run = skysim::engine::RunResult {
        telemetry: vec![rec.clone()],
        rejected_interventions: vec![],
        outcomes,
        terminated_by: skysim::engine::Termination::MaxDuration,
        duration_s: 0.0,
        dt_s: 0.1,
    };
    let verdict = evaluate(&[], &run, &s);
    let report = skysim::report::build_run_report(&run, &verdict, &s, 0, None, 1);
    let d = &report.drones["SAR1"];
    let expected = drift_plan_for(&s, "SAR1").unwrap().deviation(rec.true_pos);
    assert_eq!(d.distance_flown_m, 0.0);
    assert_eq!(d.max_cross_track_m, expected);
    assert_eq!(d.mean_cross_track_m, expected);
}

fn bbox<'a>(points: impl Iterator<Item = &'a EnuPoint>) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        b.0 = b.0.min(p.east_m);
        b.1 = b.1.max(p.east_m);
        b.2 = b.2.min(p.north_m);
        b.3 = b.3.max(p.north_m);
    }
    b
}

/// Nominal run: the flown path's bounding box stays within the planned
/// box inflated by the maximum cross-track deviation.
#[test]
fn nominal_actual_path_stays_near_planned_box() {
    let s = load_fixture("beach.json");
    let run = simulate(&s, s.sim.seed).unwrap();
    let planned = expand_mission(&s.missions["SAR1"], s.origin).unwrap();
    let plan = drift_plan_for(&s, "SAR1").unwrap();
    let max_dev = run
        .telemetry
        .iter()
        .filter(|r| r.mode == Mode::Mission)
        .map(|r| plan.deviation(r.true_pos))
        .fold(0.0, f64::max);

    let (pmin_e, pmax_e, pmin_n, pmax_n) = bbox(planned.iter());
    let mission_points: Vec<EnuPoint> = run
        .telemetry
        .iter()
        .filter(|r| r.mode == Mode::Mission)
        .map(|r| r.true_pos)
        .collect();
    let (amin_e, amax_e, amin_n, amax_n) = bbox(mission_points.iter());
    let slack = max_dev + 1e-6;
    assert!(amin_e >= pmin_e - slack && amax_e <= pmax_e + slack);
    assert!(amin_n >= pmin_n - slack && amax_n <= pmax_n + slack);
}

/// Blow-away run: the flown path exits the planned box downwind (wind from
/// the east, so the drone escapes west) and keeps going.
#[test]
fn blow_away_path_exits_planned_box_downwind() {
    let mut s = load_fixture("beach.json");
    let h = resolve_param_path(&s, "weather.layers[0].speed").unwrap();
    h.write(&mut s, 30.0 * 0.44704);
    let run = simulate(&s, s.sim.seed).unwrap();
    let planned = expand_mission(&s.missions["SAR1"], s.origin).unwrap();
    let (pmin_e, _, _, _) = bbox(planned.iter());

    let westmost = run
        .telemetry
        .iter()
        .map(|r| r.true_pos.east_m)
        .fold(f64::INFINITY, f64::min);
    assert!(
        westmost < pmin_e - 50.0,
        "expected a deep westward escape, westmost {westmost} vs planned {pmin_e}"
    );
    // Monotone escape: the east coordinate trends west over the last minute.
    let tail: Vec<f64> = run
        .telemetry
        .iter()
        .rev()
        .take(600)
        .map(|r| r.true_pos.east_m)
        .collect();
    assert!(tail.first().unwrap() < tail.last().unwrap());
}

#[test]
fn svg_plot_contains_expected_elements() {
    let s = load_fixture("beach.json");
    let run = simulate(&s, s.sim.seed).unwrap();
    let _ = evaluate(&s.monitors, &run, &s);
    let mut planned = BTreeMap::new();
    planned.insert(
        "SAR1".to_string(),
        expand_mission(&s.missions["SAR1"], s.origin).unwrap(),
    );
    let regions: Vec<_> = s.regions.iter().map(|r| r.volume()).collect();
    let mut buf = Vec::new();
    write_path_svg(&run, &planned, &regions, &mut buf).unwrap();
    let svg = String::from_utf8(buf).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("planned SAR1"));
    assert!(svg.contains("actual SAR1"));
    assert!(svg.contains("WATER"));
    assert!(svg.contains("100 m"));
    // Deterministic output.
    let mut buf2 = Vec::new();
    write_path_svg(&run, &planned, &regions, &mut buf2).unwrap();
    assert_eq!(svg.as_bytes(), buf2.as_slice());
}
