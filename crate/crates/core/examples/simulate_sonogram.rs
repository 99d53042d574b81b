//! Simulate the sonogram of a patchcord with a foreign fiber insert and save it.
//!
//! `cargo run --example simulate_sonogram [out_dir]`

use bocda::fiber::{Channel, FiberSegment};
use bocda::forward::{synthesize_sonogram, ScanConfig, Sweep};
use bocda::retrieval::peak_bfs_trace;

pub fn run_example() -> bocda::Result<()> {
    let wl = 1.55e-6;
    let host = FiberSegment::smf28(0.4);
    let b0 = host.bfs(wl)?;
    let mut insert = FiberSegment::smf28(0.2).with_bfs(b0 + 40e6, wl);
    insert.label = "insert".into();
    let channel = Channel::new(wl, vec![host, insert, FiberSegment::smf28(0.4)]);

    let mut scan = ScanConfig::with_positions(Sweep::new(0.1, 0.9, 0.01), Sweep::new(b0 - 50e6, b0 + 90e6, 1e6));
    scan.seed = 11;
    let s = synthesize_sonogram(&channel, &scan)?;
    println!(
        "{} positions x {} detunings, resolution {:.2} cm, digest {}",
        s.n_positions(),
        s.n_detunings(),
        s.meta.resolution_m * 100.0,
        &s.meta.config_digest[..12]
    );

    let trace = peak_bfs_trace(&s);
    for (z, f) in trace.positions.iter().zip(&trace.peak_bfs).step_by(5) {
        println!("{z:5.2} m  {:+7.1} MHz", (f - b0) / 1e6);
    }

    if let Some(dir) = std::env::args().nth(1) {
        let path = std::path::Path::new(&dir).join("sonogram.txt");
        std::fs::create_dir_all(&dir).map_err(|e| bocda::Error::io(&dir, e))?;
        s.save(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> bocda::Result<()> {
    run_example()
}
