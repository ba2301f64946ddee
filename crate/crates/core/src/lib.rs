//! skysim: a deterministic desk-scale simulation and runtime-verification
//! engine for multi-drone missions.
//!
//! A scenario file declares the world (wind layers, GPS quality, comms-loss
//! windows, named regions), the vehicles and their missions, the safety
//! monitors to enforce, and an optional fuzz plan that amplifies one
//! environmental parameter across scenario copies. The engine simulates each
//! scenario copy with a fixed-step kinematic model, the monitors evaluate
//! the resulting telemetry into PASSED/FAILED verdicts, and the report layer
//! emits an acceptance report with per-run analytics and the operating
//! boundary across the sweep.
//!
//! Everything is reproducible: a run is a pure function of (scenario, seed).

pub mod cli;
pub mod engine;
pub mod fuzz;
pub mod geo;
pub mod monitors;
pub mod report;
pub mod scenario;
pub mod vehicle;
pub mod world;

pub use engine::{simulate, RunResult, TelemetryRecord};
pub use fuzz::{find_boundary, generate_variants, FuzzVariant};
pub use geo::{EnuPoint, GeoPoint, Region};
pub use monitors::{evaluate, Status, Verdict, Violation};
pub use report::{build_run_report, write_report, AcceptanceReport};
pub use scenario::{parse_scenario, serialize_scenario, validate, Scenario};
pub use vehicle::{DroneState, Mode};
