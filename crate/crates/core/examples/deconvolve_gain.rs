//! Remove the correlation background from a sonogram and compare peak traces.

use bocda::fiber::{Channel, FiberSegment};
use bocda::forward::{synthesize_noiseless, ScanConfig, Sweep};
use bocda::retrieval::{background_kernel, deconvolve_gain, ground_truth_gain, peak_bfs_trace, peak_trace_from_grid};
use bocda::retrieval::{KernelOptions, DEFAULT_INTENSITY_BAND_HZ};

pub fn run_example() -> bocda::Result<()> {
    let wl = 1.55e-6;
    let a = FiberSegment::smf28(0.26);
    let b0 = a.bfs(wl)?;
    let b = FiberSegment::smf28(0.24).with_bfs(b0 + 30e6, wl);
    let channel = Channel::new(wl, vec![a, b]);
    let mut scan = ScanConfig::with_positions(Sweep::new(0.01, 0.49, 0.02), Sweep::new(b0 - 60e6, b0 + 90e6, 1e6));
    scan.noise.enabled = false;

    let s = synthesize_noiseless(&channel, &scan)?;
    let kernel = background_kernel(channel.length(), &scan, &KernelOptions::for_channel(&channel))?;
    let g = deconvolve_gain(&s, &kernel, 1e-6)?;
    let truth = ground_truth_gain(&channel, &scan, &kernel)?;
    let err: f64 = g.gain.iter().zip(&truth).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
        / truth.iter().map(|y| y * y).sum::<f64>().sqrt();
    println!("residual {:.3e}, relative error vs ground truth {:.2}%", g.residual_norm, err * 100.0);

    let raw = peak_bfs_trace(&s);
    let clean = peak_trace_from_grid(
        &s.positions,
        &s.detunings,
        &g.gain,
        DEFAULT_INTENSITY_BAND_HZ,
        s.meta.resolution_m,
        &s.meta.config_digest,
    );
    println!("   z       raw     deconvolved  (MHz from host BFS)");
    for i in (0..raw.len()).step_by(2) {
        println!(
            "{:5.2}  {:+8.2}  {:+8.2}",
            raw.positions[i],
            (raw.peak_bfs[i] - b0) / 1e6,
            (clean.peak_bfs[i] - b0) / 1e6
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> bocda::Result<()> {
    run_example()
}
