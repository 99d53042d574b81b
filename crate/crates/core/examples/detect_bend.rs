//! Find a 5 % bend tap by its intensity dip against a reference measurement.

use bocda::detect::EventKind;
use bocda::fiber::{Channel, Feature, FiberSegment};
use bocda::forward::{ScanConfig, Sweep};
use bocda::pipeline::{analyze, simulate, AnalysisConfig};

pub fn run_example() -> bocda::Result<()> {
    let wl = 1.55e-6;
    let reference = Channel::new(wl, vec![FiberSegment::smf28(1.6)]);
    let tapped = reference.clone().with_feature(Feature::bend(0.8, 0.05, 0.1));
    let b0 = FiberSegment::smf28(1.0).bfs(wl)?;
    let scan = ScanConfig::with_positions(Sweep::new(0.3, 1.3, 0.005), Sweep::new(b0 - 60e6, b0 + 60e6, 0.5e6));

    let s = simulate(&tapped, &scan, 1, "tapped")?;
    let r = simulate(&reference, &scan, 1, "reference")?;
    let out = analyze(&s, Some(&r), &tapped, &AnalysisConfig::default(), None)?;

    println!("dip threshold {:.4}", out.report.meta.thresholds["dip_threshold"]);
    for e in &out.report.events {
        println!(
            "{:?} at {:.3} m, extent {:.2} m, magnitude {:.4}, confidence {:.2}",
            e.kind, e.position_m, e.extent_m, e.magnitude, e.confidence
        );
    }
    println!("bend taps found: {}", out.report.count(EventKind::BendTap));
    Ok(())
}

#[allow(dead_code)]
fn main() -> bocda::Result<()> {
    run_example()
}
