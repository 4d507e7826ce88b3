//! Fixtures shared by the benchmarks.

use cogbeam::{build_derived, sample_channels, ChannelSet, DerivedModel, ScenarioConfig, SnrMatrix};

/// A scenario with `m = n` antennas, two primary antennas on each side and
/// `d` streams at 10 dB.
pub fn scenario(m: usize, d: usize) -> ScenarioConfig {
    ScenarioConfig::new(m, m, 2, 2, d, 1.0, 0.1, vec![10.0; d], 42).expect("valid benchmark scenario")
}

pub fn channels(config: &ScenarioConfig) -> ChannelSet {
    sample_channels(config, 0).expect("channel draw")
}

pub fn instance(m: usize, d: usize) -> (ScenarioConfig, DerivedModel, SnrMatrix) {
    let config = scenario(m, d);
    let derived = build_derived(&channels(&config), &config).expect("derived model");
    let snr = config.snr();
    (config, derived, snr)
}
