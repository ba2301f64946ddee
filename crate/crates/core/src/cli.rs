//! Command-line interface: `validate`, `run` and `check` subcommands
//! orchestrating parse → validate → fuzz → simulate → monitor → report.
//!
//! Exit codes are a CI contract:
//! 0 — overall PASSED; 1 — overall FAILED (the report was fully written);
//! 2 — usage or scenario error, nothing was simulated; 3 — internal error.
//!
//! Everything about a test lives in the scenario file; the only flags are
//! output location, seed override, plot switch, variant-count override and
//! the parallelism bound (`--jobs`, or the DRV_SIM_JOBS environment
//! variable).

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};

use crate::engine::{read_telemetry_csv, reconstruct_outcomes, simulate, RunResult};
use crate::fuzz::{find_boundary, generate_variants, FuzzVariant};
use crate::monitors::{evaluate, Status, Verdict};
use crate::report::{
    build_run_report, write_report, AcceptanceReport, BoundarySection, VariantArtifacts,
};
use crate::scenario::{
    is_runnable, parse_scenario, serialize_scenario, validate, Scenario, Severity,
};
use crate::vehicle::expand_mission;

pub const EXIT_PASSED: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Parser)]
#[command(
    name = "skysim",
    about = "Deterministic multi-drone mission simulation and runtime verification",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scenario file; print one diagnostic per line.
    Validate { scenario: PathBuf },
    /// Simulate a scenario (plus its fuzz variants) and write the report.
    Run {
        scenario: PathBuf,
        /// Report output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's sim.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write a top-down path plot per variant.
        #[arg(long)]
        svg: bool,
        /// Overrides the fuzz plan's variant count.
        #[arg(long)]
        variants: Option<u32>,
        /// Parallel variant runs (default 1; DRV_SIM_JOBS is honored too).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Evaluate a scenario's monitors against an existing telemetry CSV.
    Check {
        telemetry: PathBuf,
        scenario: PathBuf,
    },
}

/// Parses argv and runs the selected command, returning the process exit
/// code. Never prompts; all commands are non-interactive.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests exit 0; real usage errors exit 2.
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Run {
            scenario,
            out,
            seed,
            svg,
            variants,
            jobs,
        } => cmd_run(&scenario, &out, seed, svg, variants, jobs),
        Command::Check {
            telemetry,
            scenario,
        } => cmd_check(&telemetry, &scenario),
    }
}

fn load_scenario(path: &std::path::Path) -> Result<Scenario, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| e.to_string())
}

fn cmd_validate(path: &std::path::Path) -> i32 {
    let scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    let diags = validate(&scenario);
    for d in &diags {
        println!("{d}");
    }
    if diags.iter().any(|d| d.severity == Severity::Error) {
        EXIT_USAGE
    } else {
        EXIT_PASSED
    }
}

fn jobs_bound(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("DRV_SIM_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(1)
    .max(1)
}

fn cmd_run(
    path: &std::path::Path,
    out: &std::path::Path,
    seed_override: Option<u64>,
    svg: bool,
    variants_override: Option<u32>,
    jobs: Option<usize>,
) -> i32 {
    let mut scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    if let Some(seed) = seed_override {
        scenario.sim.seed = seed;
    }
    if let (Some(n), Some(f)) = (variants_override, scenario.fuzz.as_mut()) {
        f.variants = n;
    }
    let diags = validate(&scenario);
    if !is_runnable(&diags) {
        for d in &diags {
            eprintln!("{d}");
        }
        return EXIT_USAGE;
    }

    let variants: Vec<FuzzVariant> = match &scenario.fuzz {
        Some(f) => match generate_variants(&scenario, f) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("{e}");
                return EXIT_USAGE;
            }
        },
        None => vec![FuzzVariant {
            index: 0,
            param_value: f64::NAN,
            scenario: scenario.clone(),
        }],
    };
    let has_fuzz = scenario.fuzz.is_some();
    let base_seed = scenario.sim.seed;

    let runs = match run_variants(&variants, base_seed, jobs_bound(jobs)) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_INTERNAL;
        }
    };

    let mut run_reports = Vec::new();
    let mut artifacts = Vec::new();
    let mut sweep: Vec<(f64, Status)> = Vec::new();
    for (variant, (run, verdict)) in variants.iter().zip(&runs) {
        let param_value = if has_fuzz {
            Some(variant.param_value)
        } else {
            None
        };
        let seed = base_seed.wrapping_add(variant.index as u64);
        run_reports.push(build_run_report(
            run,
            verdict,
            &variant.scenario,
            variant.index,
            param_value,
            seed,
        ));
        if has_fuzz {
            sweep.push((variant.param_value, verdict.status));
        }

        let mut planned = BTreeMap::new();
        for cfg in &variant.scenario.drones {
            if let Ok(wps) = expand_mission(&variant.scenario.missions[&cfg.id], variant.scenario.origin)
            {
                planned.insert(cfg.id.clone(), wps);
            }
        }
        let regions = variant
            .scenario
            .regions
            .iter()
            .map(|r| r.volume())
            .collect();
        artifacts.push(VariantArtifacts {
            index: variant.index,
            scenario_text: serialize_scenario(&variant.scenario),
            run: run.clone(),
            planned,
            regions,
        });
    }

    let boundary = if has_fuzz {
        sweep.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        match find_boundary(&sweep) {
            Ok(b) => Some(BoundarySection {
                param_path: scenario.fuzz.as_ref().unwrap().param_path.clone(),
                boundary: b,
            }),
            Err(e) => {
                eprintln!("{e}");
                None
            }
        }
    } else {
        None
    };

    let report = AcceptanceReport::new(&scenario.name, run_reports, boundary.clone());
    if let Err(e) = write_report(&report, &artifacts, out, svg) {
        eprintln!("failed to write report: {e}");
        return EXIT_INTERNAL;
    }

    for (variant, (_, verdict)) in variants.iter().zip(&runs) {
        let param = if has_fuzz {
            format!("{}", variant.param_value)
        } else {
            "-".to_string()
        };
        println!(
            "variant {}  param={}  {}  violations={}",
            variant.index,
            param,
            verdict.status,
            verdict.violations.len()
        );
    }
    if let Some(b) = &boundary {
        println!(
            "boundary  {}  largest_passing={}  first_failure={}{}",
            b.param_path,
            b.boundary
                .largest_passing
                .map_or("none".to_string(), |v| v.to_string()),
            b.boundary
                .first_failure
                .map_or("none".to_string(), |v| v.to_string()),
            if b.boundary.non_monotone {
                "  NON_MONOTONE"
            } else {
                ""
            }
        );
    }

    match report.overall_status {
        Status::Passed => EXIT_PASSED,
        Status::Failed => EXIT_FAILED,
    }
}

type VariantOutcome = Result<(RunResult, Verdict), String>;

/// Simulates every variant, optionally on several worker threads. Variant i
/// runs with seed `base_seed + i`, so each fuzzed copy draws an independent
/// stream while variant 0 reproduces a plain run of the input scenario.
fn run_variants(
    variants: &[FuzzVariant],
    base_seed: u64,
    jobs: usize,
) -> Result<Vec<(RunResult, Verdict)>, String> {
    let n = variants.len();
    let results: Mutex<Vec<Option<VariantOutcome>>> =
        Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let worker = |_worker_id: usize| loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= n {
            break;
        }
        let v = &variants[i];
        let seed = base_seed.wrapping_add(v.index as u64);
        let outcome = simulate(&v.scenario, seed)
            .map(|run| {
                let verdict = evaluate(&v.scenario.monitors, &run, &v.scenario);
                (run, verdict)
            })
            .map_err(|e| e.to_string());
        results.lock().unwrap()[i] = Some(outcome);
    };
    if jobs <= 1 {
        worker(0);
    } else {
        std::thread::scope(|scope| {
            for w in 0..jobs.min(n) {
                scope.spawn(move || worker(w));
            }
        });
    }
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every variant index was visited"))
        .collect()
}

fn cmd_check(telemetry_path: &std::path::Path, scenario_path: &std::path::Path) -> i32 {
    let scenario = match load_scenario(scenario_path) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    let diags = validate(&scenario);
    if !is_runnable(&diags) {
        for d in &diags {
            eprintln!("{d}");
        }
        return EXIT_USAGE;
    }
    let text = match fs::read_to_string(telemetry_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", telemetry_path.display());
            return EXIT_USAGE;
        }
    };
    let telemetry = match read_telemetry_csv(&text) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_USAGE;
        }
    };
    let outcomes = match reconstruct_outcomes(&telemetry, &scenario) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_USAGE;
        }
    };
    let duration_s = telemetry.last().map_or(0.0, |r| r.t_s);
    let run = RunResult {
        telemetry,
        rejected_interventions: vec![],
        outcomes,
        terminated_by: crate::engine::Termination::AllLanded,
        duration_s,
        dt_s: scenario.sim.dt_s,
    };
    let verdict = evaluate(&scenario.monitors, &run, &scenario);
    for v in &verdict.violations {
        println!("{}  t={:.1}s  {}", v.monitor_id, v.t_s, v.message);
    }
    println!("verdict: {}", verdict.status);
    match verdict.status {
        Status::Passed => EXIT_PASSED,
        Status::Failed => EXIT_FAILED,
    }
}
