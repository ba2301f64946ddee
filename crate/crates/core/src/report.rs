//! Acceptance-test report assembly and emission: per-run verdicts and
//! analytics, the cross-variant boundary table, and the report file layout
//! (report.json plus one replayable scenario file and telemetry CSV per
//! variant, with optional top-down SVG path plots).
//!
//! Numbers in report.json are rounded to 3 decimals; everything in it can be
//! recomputed from the shipped telemetry CSVs to that precision. In-memory
//! values keep full precision.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::engine::{write_telemetry_csv, RunResult};
use crate::fuzz::BoundaryReport;
use crate::geo::{EnuPoint, Region};
use crate::monitors::{drift_plan_for, Status, Verdict};
use crate::scenario::Scenario;
use crate::vehicle::Mode;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("EMPTY_TELEMETRY: cannot plot a run with no telemetry")]
    EmptyTelemetry,
}

/// Per-drone flight analytics, recomputable from the telemetry file.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DroneAnalytics {
    pub duration_s: f64,
    pub distance_flown_m: f64,
    pub max_cross_track_m: f64,
    pub mean_cross_track_m: f64,
    pub completed: bool,
    pub landed_e: f64,
    pub landed_n: f64,
    pub landed_u: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WindLayerEcho {
    pub alt_lower_m: f64,
    pub alt_upper_m: f64,
    pub speed_mps: f64,
    pub gust_mps: f64,
    pub direction_deg: f64,
}

/// Environment context echoed into the report. Precipitation, clouds and
/// time of day have no physical effect at this scale and are metadata only.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EnvironmentEcho {
    pub layers: Vec<WindLayerEcho>,
    pub precipitation: crate::scenario::Precipitation,
    pub clouds: crate::scenario::Clouds,
    pub time_of_day: crate::scenario::TimeOfDay,
    pub gps_satellites: Option<u32>,
    pub gps_deprivation_pct: Option<f64>,
    pub seed: u64,
}

/// Everything reported about one simulated variant.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunReport {
    pub variant: u32,
    pub param_value: Option<f64>,
    pub verdict: Verdict,
    pub drones: BTreeMap<String, DroneAnalytics>,
    pub environment: EnvironmentEcho,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoundarySection {
    pub param_path: String,
    #[serde(flatten)]
    pub boundary: BoundaryReport,
}

/// The complete acceptance report for one scenario (plus fuzz variants).
/// The overall status is the verdict of variant 0 — the user-configured
/// scenario; fuzzed runs inform the boundary section instead.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AcceptanceReport {
    pub format_version: String,
    pub scenario: String,
    pub overall_status: Status,
    pub boundary: Option<BoundarySection>,
    pub runs: Vec<RunReport>,
}

impl AcceptanceReport {
    pub fn new(
        scenario_name: &str,
        runs: Vec<RunReport>,
        boundary: Option<BoundarySection>,
    ) -> Self {
        let overall_status = runs
            .iter()
            .find(|r| r.variant == 0)
            .map(|r| r.verdict.status)
            .unwrap_or(Status::Failed);
        let mut runs = runs;
        runs.sort_by(|a, b| {
            let ka = a.param_value.unwrap_or(f64::NEG_INFINITY);
            let kb = b.param_value.unwrap_or(f64::NEG_INFINITY);
            ka.partial_cmp(&kb)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.variant.cmp(&b.variant))
        });
        AcceptanceReport {
            format_version: "1".to_string(),
            scenario: scenario_name.to_string(),
            overall_status,
            boundary,
            runs,
        }
    }
}

/// Computes one variant's run report: verdict plus per-drone analytics
/// derived from the telemetry (cross-track against the planned path; radial
/// deviation for circle missions).
pub fn build_run_report(
    run: &RunResult,
    verdict: &Verdict,
    scenario: &Scenario,
    variant: u32,
    param_value: Option<f64>,
    seed: u64,
) -> RunReport {
    let mut drones = BTreeMap::new();
    for cfg in &scenario.drones {
        let plan = drift_plan_for(scenario, &cfg.id);
        let mut deviations: Vec<f64> = Vec::new();
        let mut fallback: Vec<f64> = Vec::new();
        for rec in run.telemetry.iter().filter(|r| r.drone_id == cfg.id) {
            if let Some(plan) = &plan {
                let d = plan.deviation(rec.true_pos);
                if d.is_finite() {
                    if rec.mode == Mode::Mission {
                        deviations.push(d);
                    }
                    fallback.push(d);
                }
            }
        }
        let samples = if deviations.is_empty() { &fallback } else { &deviations };
        let (max_ct, mean_ct) = if samples.is_empty() {
            (0.0, 0.0)
        } else {
            let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            (max, mean)
        };
        let outcome = &run.outcomes[&cfg.id];
        drones.insert(
            cfg.id.clone(),
            DroneAnalytics {
                duration_s: outcome.duration_s,
                distance_flown_m: outcome.distance_flown_m,
                max_cross_track_m: max_ct,
                mean_cross_track_m: mean_ct,
                completed: outcome.completed,
                landed_e: outcome.landed_pos.east_m,
                landed_n: outcome.landed_pos.north_m,
                landed_u: outcome.landed_pos.up_m,
            },
        );
    }
    RunReport {
        variant,
        param_value,
        verdict: verdict.clone(),
        drones,
        environment: EnvironmentEcho {
            layers: scenario
                .weather
                .layers
                .iter()
                .map(|l| WindLayerEcho {
                    alt_lower_m: l.alt_lower_m,
                    alt_upper_m: l.alt_upper_m,
                    speed_mps: l.speed_mps,
                    gust_mps: l.gust_mps,
                    direction_deg: l.direction_deg,
                })
                .collect(),
            precipitation: scenario.weather.precipitation,
            clouds: scenario.weather.clouds,
            time_of_day: scenario.weather.time_of_day,
            gps_satellites: scenario.gps.satellites,
            gps_deprivation_pct: scenario.gps.deprivation_pct,
            seed,
        },
    }
}

fn round_numbers(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap();
                let rounded = (x * 1000.0).round() / 1000.0;
                if let Some(num) = serde_json::Number::from_f64(rounded) {
                    *n = num;
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_numbers),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Renders report.json: stable struct-order keys, floats rounded to 3
/// decimals. Byte-identical for identical inputs.
pub fn render_report_json(ar: &AcceptanceReport) -> Result<String, ReportError> {
    let mut value = serde_json::to_value(ar)?;
    round_numbers(&mut value);
    Ok(format!("{}\n", serde_json::to_string_pretty(&value)?))
}

/// Files shipped alongside the report for one variant.
pub struct VariantArtifacts {
    pub index: u32,
    /// The variant's scenario, serialized — any run can be replayed
    /// standalone from its directory.
    pub scenario_text: String,
    pub run: RunResult,
    /// Planned ENU path per drone, for the plot.
    pub planned: BTreeMap<String, Vec<EnuPoint>>,
    pub regions: Vec<Region>,
}

/// Writes the full report layout:
/// `report.json`, then `variant_<i>/scenario.json`, `variant_<i>/telemetry.csv`
/// and (optionally) `variant_<i>/path.svg` for each variant.
pub fn write_report(
    ar: &AcceptanceReport,
    artifacts: &[VariantArtifacts],
    dest: &Path,
    svg: bool,
) -> Result<(), ReportError> {
    fs::create_dir_all(dest)?;
    fs::write(dest.join("report.json"), render_report_json(ar)?)?;
    for v in artifacts {
        let dir = dest.join(format!("variant_{}", v.index));
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("scenario.json"), &v.scenario_text)?;
        let mut csv = Vec::new();
        write_telemetry_csv(&v.run, &mut csv)?;
        fs::write(dir.join("telemetry.csv"), csv)?;
        if svg {
            let mut out = Vec::new();
            write_path_svg(&v.run, &v.planned, &v.regions, &mut out)?;
            fs::write(dir.join("path.svg"), out)?;
        }
    }
    Ok(())
}

const SVG_SIZE: f64 = 800.0;
const SVG_MARGIN: f64 = 50.0;
const ACTUAL_COLORS: [&str; 6] = [
    "#d62728", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#e377c2",
];

/// Renders a deterministic top-down plot of one run: region polygons,
/// planned route polylines (blue, dashed), per-drone actual paths, start and
/// landing markers, and a 100 m scale bar.
pub fn write_path_svg<W: Write>(
    run: &RunResult,
    planned: &BTreeMap<String, Vec<EnuPoint>>,
    regions: &[Region],
    mut w: W,
) -> Result<(), ReportError> {
    if run.telemetry.is_empty() {
        return Err(ReportError::EmptyTelemetry);
    }

    let mut min_e = f64::INFINITY;
    let mut max_e = f64::NEG_INFINITY;
    let mut min_n = f64::INFINITY;
    let mut max_n = f64::NEG_INFINITY;
    let mut take = |p: &EnuPoint| {
        min_e = min_e.min(p.east_m);
        max_e = max_e.max(p.east_m);
        min_n = min_n.min(p.north_m);
        max_n = max_n.max(p.north_m);
    };
    for rec in &run.telemetry {
        take(&rec.true_pos);
    }
    for path in planned.values() {
        path.iter().for_each(&mut take);
    }
    for r in regions {
        r.polygon.iter().for_each(&mut take);
    }

    let extent = (max_e - min_e).max(max_n - min_n).max(1.0);
    let scale = (SVG_SIZE - 2.0 * SVG_MARGIN) / extent;
    let x = |e: f64| (e - min_e) * scale + SVG_MARGIN;
    let y = |n: f64| (max_n - n) * scale + SVG_MARGIN;
    let width = (max_e - min_e) * scale + 2.0 * SVG_MARGIN;
    let height = (max_n - min_n) * scale + 2.0 * SVG_MARGIN;

    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width:.2} {height:.2}\">"
    )?;
    writeln!(
        w,
        "  <rect x=\"0\" y=\"0\" width=\"{width:.2}\" height=\"{height:.2}\" fill=\"#fcfcf7\"/>"
    )?;

    for r in regions {
        let points: Vec<String> = r
            .polygon
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.east_m), y(p.north_m)))
            .collect();
        writeln!(
            w,
            "  <polygon points=\"{}\" fill=\"#66bb6a\" fill-opacity=\"0.35\" stroke=\"#2e7d32\"/>",
            points.join(" ")
        )?;
        if let Some(first) = r.polygon.first() {
            writeln!(
                w,
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#2e7d32\">{}</text>",
                x(first.east_m) + 4.0,
                y(first.north_m) - 4.0,
                r.id
            )?;
        }
    }

    for (id, path) in planned {
        if path.is_empty() {
            continue;
        }
        let points: Vec<String> = path
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.east_m), y(p.north_m)))
            .collect();
        writeln!(
            w,
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" \
             stroke-dasharray=\"7 5\"><title>planned {id}</title></polyline>",
            points.join(" ")
        )?;
    }

    let mut drone_ids: Vec<&String> = run.outcomes.keys().collect();
    drone_ids.sort();
    for (i, id) in drone_ids.iter().enumerate() {
        let color = ACTUAL_COLORS[i % ACTUAL_COLORS.len()];
        let path: Vec<&EnuPoint> = run
            .telemetry
            .iter()
            .filter(|r| &r.drone_id == *id)
            .map(|r| &r.true_pos)
            .collect();
        if path.is_empty() {
            continue;
        }
        let points: Vec<String> = path
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.east_m), y(p.north_m)))
            .collect();
        writeln!(
            w,
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\">\
             <title>actual {id}</title></polyline>",
            points.join(" ")
        )?;
        let start = path[0];
        let end = path[path.len() - 1];
        writeln!(
            w,
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"{color}\"><title>{id} start</title></circle>",
            x(start.east_m),
            y(start.north_m)
        )?;
        writeln!(
            w,
            "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"8\" height=\"8\" fill=\"{color}\" \
             stroke=\"#333333\"><title>{id} end</title></rect>",
            x(end.east_m) - 4.0,
            y(end.north_m) - 4.0
        )?;
    }

    // 100 m scale bar, lower left.
    let bar = 100.0 * scale;
    let by = height - SVG_MARGIN / 2.0;
    writeln!(
        w,
        "  <line x1=\"{:.2}\" y1=\"{by:.2}\" x2=\"{:.2}\" y2=\"{by:.2}\" stroke=\"#333333\" stroke-width=\"3\"/>",
        SVG_MARGIN,
        SVG_MARGIN + bar
    )?;
    writeln!(
        w,
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#333333\">100 m</text>",
        SVG_MARGIN,
        by - 6.0
    )?;
    writeln!(w, "</svg>")?;
    Ok(())
}
