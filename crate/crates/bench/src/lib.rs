//! Fixtures shared by the benchmarks.

use centledger_core::bank::Economy;
use centledger_core::sim::{self, ScenarioConfig};

pub const SMALL_ECONOMY: &str = include_str!("../../../scenarios/small_economy.toml");

/// The small economy run for `days` days.
pub fn small_economy(days: u32) -> ScenarioConfig {
    let mut c = ScenarioConfig::parse(SMALL_ECONOMY).expect("bundled scenario parses");
    c.duration_days = days;
    c
}

pub fn settled_economy(days: u32) -> Economy {
    sim::run(small_economy(days)).expect("bundled scenario runs").economy
}
