//! Run one of the bundled figure scenarios and list what it produced.
//!
//! `cargo run --example run_scenario -- fig4c [out_dir]`

use bocda::cli::{default_scenarios_dir, write_artifacts};
use bocda::pipeline::{run_scenario, Scenario};

pub fn run_example() -> bocda::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "fig4c".into());
    let scenario = Scenario::load(default_scenarios_dir().join(&name).join("scenario.toml"))?;
    println!("{name}: {}", scenario.description);
    let artifacts = run_scenario(&scenario, scenario.seed)?;
    for a in &artifacts {
        println!("  {} ({} bytes)", a.path, a.bytes.len());
    }
    if let Some(out) = args.next() {
        write_artifacts(std::path::Path::new(&out), &artifacts)?;
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> bocda::Result<()> {
    run_example()
}
