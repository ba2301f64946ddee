//! Fuzzed scenario generation along one environmental parameter, and
//! operating-boundary identification across the resulting verdicts.
//!
//! The value ladder doubles up to the configured maximum: variant i of N
//! carries `max_value · 2^(i−N)`, so the maximum itself is always tested
//! (the termination condition is honored literally) and consecutive rungs
//! have ratio exactly 2.

use thiserror::Error;

use crate::monitors::Status;
use crate::scenario::{resolve_param_path, FuzzSpec, PathError, Scenario};

#[derive(Debug, Error, PartialEq)]
pub enum FuzzError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("FUZZ_MAX_BELOW_CURRENT: max_value {max} does not exceed the current value {current}")]
    MaxBelowCurrent { max: f64, current: f64 },
    #[error("no results to analyze")]
    EmptyResults,
}

/// One scenario copy in a fuzz sweep. Index 0 is the unmodified input.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzVariant {
    pub index: u32,
    /// The value at the fuzzed field (for variant 0, its original value).
    pub param_value: f64,
    pub scenario: Scenario,
}

/// Generates variant 0 (the original scenario) plus N fuzzed copies on the
/// doubling ladder ending exactly at `f.max_value`. Each copy differs from
/// the input only at the fuzzed field — and drops the fuzz plan itself, so
/// a copy written to disk replays standalone as a single run.
pub fn generate_variants(s: &Scenario, f: &FuzzSpec) -> Result<Vec<FuzzVariant>, FuzzError> {
    let handle = resolve_param_path(s, &f.param_path)?;
    let current = handle.read(s);
    if current != 0.0 && f.max_value <= current {
        return Err(FuzzError::MaxBelowCurrent {
            max: f.max_value,
            current,
        });
    }
    let mut variants = Vec::with_capacity(f.variants as usize + 1);
    variants.push(FuzzVariant {
        index: 0,
        param_value: current,
        scenario: s.clone(),
    });
    for i in 1..=f.variants {
        let value = f.max_value * 2f64.powi(i as i32 - f.variants as i32);
        let mut scenario = s.clone();
        scenario.fuzz = None;
        handle.write(&mut scenario, value);
        variants.push(FuzzVariant {
            index: i,
            param_value: value,
            scenario,
        });
    }
    Ok(variants)
}

/// The operating boundary extracted from an ordered sweep of verdicts.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoundaryReport {
    /// Largest parameter value whose verdict was PASSED, if any run passed.
    pub largest_passing: Option<f64>,
    /// Smallest parameter value whose verdict was FAILED, if any run failed.
    pub first_failure: Option<f64>,
    /// True when a failure occurs below a pass — stochastic gusts can do
    /// this, and the sequence is reported verbatim rather than smoothed.
    pub non_monotone: bool,
}

/// Folds an ascending list of (param_value, verdict status) pairs into a
/// boundary report. The list must include variant 0 and be ordered by value.
pub fn find_boundary(results: &[(f64, Status)]) -> Result<BoundaryReport, FuzzError> {
    if results.is_empty() {
        return Err(FuzzError::EmptyResults);
    }
    let largest_passing = results
        .iter()
        .filter(|(_, s)| *s == Status::Passed)
        .map(|(v, _)| *v)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    let first_failure = results
        .iter()
        .filter(|(_, s)| *s == Status::Failed)
        .map(|(v, _)| *v)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    let non_monotone = match (largest_passing, first_failure) {
        (Some(p), Some(f)) => f < p,
        _ => false,
    };
    Ok(BoundaryReport {
        largest_passing,
        first_failure,
        non_monotone,
    })
}
