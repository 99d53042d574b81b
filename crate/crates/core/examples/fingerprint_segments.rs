//! Split a patchcord chain into constant-BFS pieces and name each manufacturer.

use std::collections::BTreeMap;

use bocda::detect::{FingerprintDb, FingerprintEntry, SegmentConfig};
use bocda::fiber::{Channel, FiberSegment};
use bocda::forward::{ScanConfig, Sweep};
use bocda::pipeline::{fingerprint_segments, simulate};
use bocda::retrieval::peak_bfs_trace;

pub fn run_example() -> bocda::Result<()> {
    let wl = 1.55e-6;
    let b0 = FiberSegment::smf28(1.0).bfs(wl)?;
    let cord = |len: f64, shift: f64, label: &str| {
        let mut s = FiberSegment::smf28(len).with_bfs(b0 + shift, wl);
        s.label = label.into();
        s
    };
    let channel =
        Channel::new(wl, vec![cord(0.5, 0.0, "Thorlabs"), cord(0.6, 4e6, "Newport"), cord(0.5, 10e6, "Opneti")]);

    let mut entries = BTreeMap::new();
    for (label, shift) in [("Thorlabs", 0.0), ("Newport", 4e6), ("Opneti", 10e6)] {
        entries.insert(label.to_string(), FingerprintEntry { mean_bfs_hz: b0 + shift, tolerance_hz: 1.5e6 });
    }
    let db = FingerprintDb::new(entries)?;

    let mut scan = ScanConfig::with_positions(Sweep::new(0.05, 1.55, 0.005), Sweep::new(b0 - 50e6, b0 + 60e6, 0.5e6));
    scan.noise.relative_sigma = 5e-4;
    scan.noise.floor_fraction = 1e-4;
    let trace = peak_bfs_trace(&simulate(&channel, &scan, 4, "chain")?);
    let cfg = SegmentConfig { min_step_hz: 2e6, min_extent_m: 0.1, ..SegmentConfig::default() };
    for row in fingerprint_segments(&trace, &cfg, &db) {
        println!("{:5.2}-{:5.2} m  {:+6.2} MHz  {}", row.start_m, row.end_m, (row.mean_bfs_hz - b0) / 1e6, row.label);
    }
    println!("{:+.1} MHz -> {}", 20.0, db.classify(b0 + 20e6));
    Ok(())
}

#[allow(dead_code)]
fn main() -> bocda::Result<()> {
    run_example()
}
