//! Command-line front end.
//!
//! Every command computes all of its artifacts in memory first and writes
//! them at the end; if a write fails, files already written by the run are
//! removed. Errors are printed to stderr as one JSON object:
//!
//! ```text
//! {"error": "<kind>", "message": "...", "violations": [{"subject", "rule", "message"}]}
//! ```

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::detect::FingerprintDb;
use crate::error::{Error, Result};
use crate::fiber::Channel;
use crate::forward::ScanConfig;
use crate::otdr::OtdrConfig;
use crate::pipeline::{
    analyze, check_digest, fingerprint_segments, fingerprint_table, run_scenario, simulate, AnalysisConfig, Artifact,
    Scenario, ScenarioMode, ScenarioRun,
};
use crate::sonogram::Sonogram;

#[derive(Debug, Parser)]
#[command(name = "bocda", version, about = "Correlation-domain Brillouin analysis of fiber channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a sonogram for a channel and scan.
    Simulate(SimulateArgs),
    /// Extract the trace and detect events in a sonogram.
    Analyze(AnalyzeArgs),
    /// Classify the segments of a sonogram against a fingerprint database.
    Fingerprint(FingerprintArgs),
    /// Run the correlation-domain pipeline and the OTDR baseline on one channel.
    CompareOtdr(CompareArgs),
    /// Regenerate a canned figure scenario.
    ReproduceFigure(FigureArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Override a configuration value, e.g. `scan.noise.relative_sigma=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub scan: PathBuf,
    /// Manifest seed; defaults to the scan's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub sonogram: PathBuf,
    /// Sonogram of the untapped channel used to normalize intensity.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub analysis: Option<PathBuf>,
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Detect on deconvolved gain instead of the raw sonogram.
    #[arg(long)]
    pub use_deconvolution: bool,
    /// Accept a sonogram whose channel digest differs from `--channel`.
    #[arg(long)]
    pub ignore_digest: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FingerprintArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub sonogram: PathBuf,
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long)]
    pub analysis: Option<PathBuf>,
    #[arg(long)]
    pub use_deconvolution: bool,
    #[arg(long)]
    pub ignore_digest: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub scan: PathBuf,
    #[arg(long)]
    pub otdr: Option<PathBuf>,
    #[arg(long)]
    pub analysis: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub use_deconvolution: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    #[value(name = "2b")]
    Fig2b,
    #[value(name = "3")]
    Fig3,
    #[value(name = "4a")]
    Fig4a,
    #[value(name = "4b")]
    Fig4b,
    #[value(name = "4c")]
    Fig4c,
    #[value(name = "4d")]
    Fig4d,
    #[value(name = "5")]
    Fig5,
}

impl Figure {
    pub fn dir_name(self) -> &'static str {
        match self {
            Figure::Fig2b => "fig2b",
            Figure::Fig3 => "fig3",
            Figure::Fig4a => "fig4a",
            Figure::Fig4b => "fig4b",
            Figure::Fig4c => "fig4c",
            Figure::Fig4d => "fig4d",
            Figure::Fig5 => "fig5",
        }
    }
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    pub figure: Figure,
    /// Defaults to the scenario's own seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory holding `<figure>/scenario.toml`.
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    #[arg(long)]
    pub use_deconvolution: bool,
    #[command(flatten)]
    pub common: Common,
}

/// Directory of the bundled figure scenarios.
pub fn default_scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

/// Set `path` (dot separated, numeric parts index arrays) in `value`.
///
/// Keys that do not exist are accepted only if the typed config accepts them
/// afterwards, which covers optional fields left unset.
fn set_path(root: &mut Value, key: &str, path: &[&str], raw: &str) -> Result<()> {
    let parsed: Value = serde_json::from_str(raw)
        .or_else(|_| toml::from_str::<toml::Value>(&format!("v = {raw}")).map(|t| toml_to_json(&t["v"])))
        .unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for (i, part) in path.iter().enumerate() {
        let last = i + 1 == path.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), parsed);
                    return Ok(());
                }
                map.get_mut(*part).ok_or_else(|| Error::UnknownKey(key.to_string()))?
            }
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| Error::UnknownKey(key.to_string()))?;
                let slot = items.get_mut(idx).ok_or_else(|| Error::UnknownKey(key.to_string()))?;
                if last {
                    *slot = parsed;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::UnknownKey(key.to_string())),
        };
    }
    Err(Error::UnknownKey(key.to_string()))
}

fn toml_to_json(v: &toml::Value) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// Apply `key=value` overrides under `section` to a typed config.
pub fn apply_overrides<T: Serialize + DeserializeOwned>(value: &T, section: &str, sets: &[String]) -> Result<T> {
    let mut tree = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    for s in sets {
        let (key, raw) = s.split_once('=').ok_or_else(|| Error::Parse(format!("override `{s}` is not key=value")))?;
        let parts: Vec<&str> = key.split('.').collect();
        if parts.first() != Some(&section) {
            continue;
        }
        if parts.len() < 2 {
            return Err(Error::UnknownKey(key.to_string()));
        }
        set_path(&mut tree, key, &parts[1..], raw)?;
        // unknown fields are rejected by the typed config
        serde_json::from_value::<T>(tree.clone()).map_err(|e| {
            if e.to_string().contains("unknown field") {
                Error::UnknownKey(key.to_string())
            } else {
                Error::Parse(format!("{key}: {e}"))
            }
        })?;
    }
    serde_json::from_value(tree).map_err(|e| Error::Parse(e.to_string()))
}

const SECTIONS: [&str; 4] = ["channel", "scan", "analysis", "otdr"];

fn check_sections(sets: &[String], allowed: &[&str]) -> Result<()> {
    for s in sets {
        let key = s.split_once('=').map_or(s.as_str(), |(k, _)| k);
        let head = key.split('.').next().unwrap_or("");
        if !SECTIONS.contains(&head) || !allowed.contains(&head) {
            return Err(Error::UnknownKey(key.to_string()));
        }
    }
    Ok(())
}

fn load_analysis(path: Option<&Path>) -> Result<AnalysisConfig> {
    match path {
        None => Ok(AnalysisConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str(&text).map_err(|e| Error::Parse(format!("analysis: {e}")))
        }
    }
}

fn load_channel(path: &Path, sets: &[String]) -> Result<Channel> {
    let ch = apply_overrides(&Channel::load(path)?, "channel", sets)?;
    let v = ch.validate();
    if !v.is_empty() {
        return Err(Error::InvalidChannel(v));
    }
    Ok(ch)
}

fn load_sonogram(path: &Path, channel: &Channel, ignore_digest: bool) -> Result<Sonogram> {
    let s = Sonogram::load(path)?;
    if !ignore_digest {
        check_digest(&s, channel)?;
    }
    Ok(s)
}

fn simulate_cmd(a: &SimulateArgs) -> Result<Vec<Artifact>> {
    check_sections(&a.common.set, &["channel", "scan"])?;
    let ch = load_channel(&a.channel, &a.common.set)?;
    let scan = apply_overrides(&ScanConfig::load(&a.scan)?, "scan", &a.common.set)?;
    let seed = a.seed.unwrap_or(scan.seed);
    let s = simulate(&ch, &scan, seed, "sonogram")?;
    Ok(vec![
        Artifact::text("sonogram.txt", s.to_text()),
        Artifact::text("sonogram.meta.json", s.meta_json()),
        Artifact::text("channel.toml", ch.to_toml_string()),
    ])
}

fn analyze_cmd(a: &AnalyzeArgs) -> Result<Vec<Artifact>> {
    check_sections(&a.common.set, &["channel", "analysis"])?;
    let ch = load_channel(&a.channel, &a.common.set)?;
    let mut cfg = apply_overrides(&load_analysis(a.analysis.as_deref())?, "analysis", &a.common.set)?;
    cfg.use_deconvolution |= a.use_deconvolution;
    let s = load_sonogram(&a.sonogram, &ch, a.ignore_digest)?;
    // the reference comes from the untapped channel, so its digest is not checked
    let r = a.reference.as_deref().map(Sonogram::load).transpose()?;
    let db = a.db.as_deref().map(FingerprintDb::load).transpose()?;
    let out = analyze(&s, r.as_ref(), &ch, &cfg, db.as_ref())?;
    let mut arts = vec![Artifact::text("trace.csv", out.trace.to_text())];
    if let Some(g) = &out.gain {
        arts.push(Artifact::text("gainmap.txt", g.to_text()));
    }
    arts.push(Artifact::text("report.json", out.report.to_json()));
    Ok(arts)
}

fn fingerprint_cmd(a: &FingerprintArgs) -> Result<Vec<Artifact>> {
    check_sections(&a.common.set, &["channel", "analysis"])?;
    let ch = load_channel(&a.channel, &a.common.set)?;
    let mut cfg = apply_overrides(&load_analysis(a.analysis.as_deref())?, "analysis", &a.common.set)?;
    cfg.use_deconvolution |= a.use_deconvolution;
    let s = load_sonogram(&a.sonogram, &ch, a.ignore_digest)?;
    let db = FingerprintDb::load(&a.db)?;
    let out = analyze(&s, None, &ch, &cfg, Some(&db))?;
    let rows = fingerprint_segments(&out.trace, &cfg.segment, &db);
    Ok(vec![
        Artifact::text("trace.csv", out.trace.to_text()),
        Artifact::text("fingerprint.csv", fingerprint_table(&rows, &s.meta.config_digest)),
        Artifact::text("report.json", out.report.to_json()),
    ])
}

fn compare_cmd(a: &CompareArgs) -> Result<Vec<Artifact>> {
    check_sections(&a.common.set, &["channel", "scan", "analysis", "otdr"])?;
    let ch = load_channel(&a.channel, &a.common.set)?;
    let scan = apply_overrides(&ScanConfig::load(&a.scan)?, "scan", &a.common.set)?;
    let otdr: OtdrConfig = match &a.otdr {
        None => OtdrConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str(&text).map_err(|e| Error::Parse(format!("otdr: {e}")))?
        }
    };
    let otdr = apply_overrides(&otdr, "otdr", &a.common.set)?;
    let mut analysis = apply_overrides(&load_analysis(a.analysis.as_deref())?, "analysis", &a.common.set)?;
    analysis.use_deconvolution |= a.use_deconvolution;
    let scenario = Scenario {
        description: format!("compare-otdr on {}", a.channel.display()),
        mode: ScenarioMode::CompareOtdr,
        seed: a.seed.unwrap_or(scan.seed),
        scan,
        analysis,
        otdr,
        fingerprints: None,
        runs: vec![ScenarioRun { name: "channel".into(), channel: ch }],
    };
    run_scenario(&scenario, scenario.seed)
}

fn figure_cmd(a: &FigureArgs) -> Result<Vec<Artifact>> {
    check_sections(&a.common.set, &SECTIONS)?;
    let dir = a.scenarios.clone().unwrap_or_else(default_scenarios_dir);
    let mut sc = Scenario::load(dir.join(a.figure.dir_name()).join("scenario.toml"))?;
    sc.scan = apply_overrides(&sc.scan, "scan", &a.common.set)?;
    sc.analysis = apply_overrides(&sc.analysis, "analysis", &a.common.set)?;
    sc.analysis.use_deconvolution |= a.use_deconvolution;
    sc.otdr = apply_overrides(&sc.otdr, "otdr", &a.common.set)?;
    for run in &mut sc.runs {
        run.channel = apply_overrides(&run.channel, "channel", &a.common.set)?;
        let v = run.channel.validate();
        if !v.is_empty() {
            return Err(Error::InvalidChannel(v));
        }
    }
    let seed = a.seed.unwrap_or(sc.seed);
    let mut arts = run_scenario(&sc, seed)?;
    arts.push(Artifact::text("scenario.toml", toml::to_string(&sc).map_err(|e| Error::Parse(e.to_string()))?));
    Ok(arts)
}

/// Compute the artifacts of a parsed command without touching the disk.
pub fn artifacts(command: &Command) -> Result<(PathBuf, Vec<Artifact>)> {
    match command {
        Command::Simulate(a) => Ok((a.common.out.clone(), simulate_cmd(a)?)),
        Command::Analyze(a) => Ok((a.common.out.clone(), analyze_cmd(a)?)),
        Command::Fingerprint(a) => Ok((a.common.out.clone(), fingerprint_cmd(a)?)),
        Command::CompareOtdr(a) => Ok((a.common.out.clone(), compare_cmd(a)?)),
        Command::ReproduceFigure(a) => Ok((a.common.out.clone(), figure_cmd(a)?)),
    }
}

/// Write `arts` under `out`, removing what was written if any write fails.
pub fn write_artifacts(out: &Path, arts: &[Artifact]) -> Result<Vec<PathBuf>> {
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        for a in arts {
            let p = out.join(&a.path);
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            std::fs::write(&p, &a.bytes).map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }
        Ok(())
    })();
    if let Err(e) = result {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
        return Err(e);
    }
    Ok(written)
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::InvalidChannel(_) => "invalid_channel",
        Error::InvalidScan(_) => "invalid_scan",
        Error::GridMismatch(_) => "grid_mismatch",
        Error::GridTooLarge { .. } => "grid_too_large",
        Error::NonConvergence { .. } => "non_convergence",
        Error::AmbiguousDb(_) => "ambiguous_db",
        Error::Parse(_) => "parse",
        Error::DigestMismatch { .. } => "digest_mismatch",
        Error::UnknownKey(_) => "unknown_key",
        Error::Io { .. } => "io",
    }
}

/// Machine-readable error listing.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({
        "error": error_kind(e),
        "message": e.to_string(),
        "violations": e.violations(),
    })
    .to_string()
}

/// Parse `args`, run, write artifacts; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match artifacts(&cli.command).and_then(|(out, arts)| write_artifacts(&out, &arts)) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            1
        }
    }
}
