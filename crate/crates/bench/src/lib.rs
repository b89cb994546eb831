//! Shared fixtures for the benchmarks.

use twr_core::model::{generate_channels, ChannelSet, Mode, NetworkConfig};

pub struct Fixture {
    pub cfg: NetworkConfig,
    pub fd: ChannelSet,
    pub tf: ChannelSet,
}

/// Reference configuration at σ_SI² = −130 dB with channels from `seed`.
pub fn fixture(k: usize, m: usize, n_r: usize, seed: u64) -> Fixture {
    let mut cfg = NetworkConfig::experiment(k, m, n_r, -130.0);
    cfg.seed = seed;
    let fd = generate_channels(&cfg, Mode::Fd, seed);
    let tf = generate_channels(&cfg, Mode::Tf, seed);
    Fixture { cfg, fd, tf }
}

pub const SCENARIOS: [(usize, usize, usize); 3] = [(2, 1, 8), (2, 2, 4), (2, 4, 2)];
