//! A 1 % bend is below what a 2 ns OTDR can resolve but shows up as a gain dip.

use bocda::detect::EventKind;
use bocda::fiber::{Channel, Feature, FiberSegment};
use bocda::forward::{ScanConfig, Sweep};
use bocda::otdr::{mean_trace, otdr_detect, pulse_extent, simulate_with, OtdrConfig};
use bocda::pipeline::{analyze, simulate, AnalysisConfig};

pub fn run_example() -> bocda::Result<()> {
    let wl = 1.55e-6;
    let reference = Channel::new(wl, vec![FiberSegment::smf28(2.0)]);
    let tapped = reference.clone().with_feature(Feature::bend(1.0, 0.01, 0.1));

    let otdr = OtdrConfig::default();
    let traces = simulate_with(&tapped, &otdr, 5)?;
    let mean = mean_trace(&traces)?;
    let i = mean.positions.iter().position(|z| *z >= 0.9).unwrap_or(0);
    let j = mean.positions.iter().position(|z| *z >= 1.1).unwrap_or(0);
    println!(
        "OTDR: pulse extent {:.1} cm, mean power {:.3} dB before and {:.3} dB after the bend",
        pulse_extent(&tapped, otdr.pulse_width_s) * 100.0,
        mean.power_db[i],
        mean.power_db[j]
    );
    println!("OTDR events: {}", otdr_detect(&traces, otdr.threshold_db)?.len());

    let b0 = FiberSegment::smf28(1.0).bfs(wl)?;
    let scan = ScanConfig::with_positions(Sweep::new(0.4, 1.6, 0.005), Sweep::new(b0 - 60e6, b0 + 60e6, 0.5e6));
    let s = simulate(&tapped, &scan, 5, "tapped")?;
    let r = simulate(&reference, &scan, 5, "reference")?;
    let report = analyze(&s, Some(&r), &tapped, &AnalysisConfig::default(), None)?.report;
    for e in report.events.iter().filter(|e| e.kind == EventKind::BendTap) {
        println!("gain dip at {:.3} m, estimated loss {:.2} %", e.position_m, e.magnitude * 100.0);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> bocda::Result<()> {
    run_example()
}
