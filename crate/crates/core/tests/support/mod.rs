//! Shared helpers for integration tests.

#![allow(dead_code)]

pub mod brute;

use std::path::PathBuf;

use skysim::scenario::{parse_scenario, Scenario};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn load_fixture(name: &str) -> Scenario {
    let text = std::fs::read_to_string(fixture_path(name))
        .unwrap_or_else(|e| panic!("cannot read fixture {name}: {e}"));
    parse_scenario(&text).unwrap_or_else(|e| panic!("fixture {name} failed to parse: {e}"))
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}
