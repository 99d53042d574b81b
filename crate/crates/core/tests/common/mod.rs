#![allow(dead_code)]

use std::path::PathBuf;

use bocda::fiber::Channel;
use bocda::forward::{apply_noise, synthesize_noiseless, ScanConfig};
use bocda::pipeline::Scenario;
use bocda::Sonogram;

pub fn scenario(fig: &str) -> Scenario {
    let path: PathBuf = bocda::cli::default_scenarios_dir().join(fig).join("scenario.toml");
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn run_channel(s: &Scenario, name: &str) -> Channel {
    s.runs.iter().find(|r| r.name == name).unwrap_or_else(|| panic!("no run {name}")).channel.clone()
}

/// Noiseless sonogram computed once, noisy copies drawn per seed.
pub struct Bench {
    pub channel: Channel,
    pub scan: ScanConfig,
    pub clean: Sonogram,
}

impl Bench {
    pub fn new(channel: Channel, scan: &ScanConfig) -> Self {
        let clean = synthesize_noiseless(&channel, scan).unwrap();
        Self { channel, scan: scan.clone(), clean }
    }

    pub fn noisy(&self, seed: u64) -> Sonogram {
        apply_noise(&self.clean, &self.scan.noise, seed, &self.channel)
    }
}

pub fn b0() -> f64 {
    bocda::FiberSegment::smf28(1.0).bfs(1.55e-6).unwrap()
}
