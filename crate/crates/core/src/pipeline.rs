//! End-to-end analysis and the canned figure scenarios.
//!
//! [`analyze`] turns a sonogram (and optionally a reference sonogram of the
//! untapped channel) into a trace, an optional gain map and a report.
//! [`Scenario`] bundles channels, scan, analysis and OTDR settings as data;
//! [`run_scenario`] produces every artifact of one scenario in memory.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::{
    compile_report, detect_intensity_dip, detect_point_feature_with, dip_statistic, segment_bfs_with, segment_levels,
    AnalysisReport, BendResponse, DipConfig, Event, EventKind, FingerprintDb, FingerprintEntry, PointConfig,
    ReportMeta, SegmentConfig,
};
use crate::digest::sub_seed;
use crate::error::{Error, Result};
use crate::fiber::Channel;
use crate::forward::{apply_noise, synthesize_noiseless, ScanConfig};
use crate::otdr::{mean_trace, otdr_detect, simulate_with, OtdrConfig};
use crate::retrieval::{
    background_kernel, deconvolve_gain, peak_trace_from_grid, BfsTrace, GainMap, KernelOptions, DEFAULT_LAMBDA,
};
use crate::sonogram::Sonogram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub dip: DipConfig,
    #[serde(default)]
    pub segment: SegmentConfig,
    #[serde(default)]
    pub point: PointConfig,
    #[serde(default = "d_lambda")]
    pub lambda: f64,
    /// Re-map bend magnitudes through a forward-simulated response at each event.
    #[serde(default = "d_yes")]
    pub calibrate_bend: bool,
    #[serde(default = "d_band")]
    pub intensity_band_hz: f64,
    #[serde(default)]
    pub use_deconvolution: bool,
}

fn d_lambda() -> f64 {
    DEFAULT_LAMBDA
}
fn d_yes() -> bool {
    true
}
fn d_band() -> f64 {
    crate::retrieval::DEFAULT_INTENSITY_BAND_HZ
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            dip: DipConfig::default(),
            segment: SegmentConfig::default(),
            point: PointConfig::default(),
            lambda: d_lambda(),
            calibrate_bend: true,
            intensity_band_hz: d_band(),
            use_deconvolution: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub trace: BfsTrace,
    pub reference_trace: Option<BfsTrace>,
    pub gain: Option<GainMap>,
    pub report: AnalysisReport,
}

fn trace_of(s: &Sonogram, channel: &Channel, cfg: &AnalysisConfig) -> Result<(BfsTrace, Option<GainMap>)> {
    let m = &s.meta;
    if cfg.use_deconvolution {
        let kernel = background_kernel(m.channel_length_m, &m.scan, &KernelOptions::for_channel(channel))?;
        let g = deconvolve_gain(s, &kernel, cfg.lambda)?;
        let t = peak_trace_from_grid(
            &s.positions,
            &s.detunings,
            &g.gain,
            cfg.intensity_band_hz,
            m.resolution_m,
            &m.config_digest,
        );
        Ok((t, Some(g)))
    } else {
        let t = peak_trace_from_grid(
            &s.positions,
            &s.detunings,
            &s.intensity,
            cfg.intensity_band_hz,
            m.resolution_m,
            &m.config_digest,
        );
        Ok((t, None))
    }
}

/// Refuse a sonogram that was not produced from `channel`.
pub fn check_digest(s: &Sonogram, channel: &Channel) -> Result<()> {
    let expected = channel.digest();
    if s.meta.channel_digest != expected {
        return Err(Error::DigestMismatch { expected, found: s.meta.channel_digest.clone() });
    }
    Ok(())
}

/// Detect and report events in `sonogram`.
///
/// `channel` provides the linewidth for the deconvolution kernel and, with
/// its taps removed, the forward model used to calibrate bend magnitudes.
pub fn analyze(
    sonogram: &Sonogram,
    reference: Option<&Sonogram>,
    channel: &Channel,
    cfg: &AnalysisConfig,
    db: Option<&FingerprintDb>,
) -> Result<AnalysisOutput> {
    sonogram.check_shape()?;
    let (trace, gain) = trace_of(sonogram, channel, cfg)?;
    let reference_trace = match reference {
        Some(r) => {
            r.check_shape()?;
            let (t, _) = trace_of(r, channel, cfg)?;
            trace.check_same_grid(&t)?;
            Some(t)
        }
        None => None,
    };

    let mut events = detect_intensity_dip(&trace, reference_trace.as_ref(), &cfg.dip)?;
    if cfg.calibrate_bend && !cfg.use_deconvolution {
        let base = channel.without_taps();
        for e in &mut events {
            let response = BendResponse::calibrate(&base, &sonogram.meta.scan, e.position_m, &cfg.dip)?;
            let depth = cfg.dip.response.depth(e.magnitude);
            e.magnitude = response.invert(depth).max(0.0);
        }
    }
    let mut segments = segment_bfs_with(&trace, &cfg.segment)?;
    if let Some(db) = db {
        for e in &mut segments {
            e.label = Some(db.classify_event(e));
        }
    }
    events.extend(segments);
    // the peak BFS is unreliable where a bend has drained the gain
    let bends: Vec<(f64, f64)> =
        events.iter().filter(|e| e.kind == EventKind::BendTap).map(|e| (e.start_m(), e.end_m())).collect();
    events.extend(
        detect_point_feature_with(&trace, &cfg.point)
            .into_iter()
            .filter(|p| !bends.iter().any(|(a, b)| (*a..=*b).contains(&p.position_m))),
    );

    let dip = dip_statistic(&trace, reference_trace.as_ref(), &cfg.dip)?;
    let mut thresholds = BTreeMap::new();
    thresholds.insert("dip_sigma".to_string(), dip.sigma);
    thresholds.insert("dip_threshold".to_string(), dip.threshold);
    thresholds.insert("dip_extent_prior_m".to_string(), cfg.dip.extent_prior_m);
    thresholds.insert("segment_min_step_hz".to_string(), cfg.segment.min_step_hz);
    thresholds.insert("segment_min_extent_m".to_string(), cfg.segment.min_extent_m);
    thresholds.insert("point_z_threshold".to_string(), cfg.point.z_threshold);
    if cfg.use_deconvolution {
        thresholds.insert("lambda".to_string(), cfg.lambda);
    }
    let meta = ReportMeta {
        config_digest: sonogram.meta.config_digest.clone(),
        channel_length_m: sonogram.meta.channel_length_m,
        resolution_m: sonogram.meta.resolution_m,
        source: if cfg.use_deconvolution { "deconvolved" } else { "raw" }.to_string(),
        scan: Some(sonogram.meta.scan.clone()),
        thresholds,
    };
    Ok(AnalysisOutput { trace, reference_trace, gain, report: compile_report(events, meta) })
}

/// One row of a fingerprint table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFingerprint {
    pub start_m: f64,
    pub end_m: f64,
    pub mean_bfs_hz: f64,
    pub label: String,
}

/// Mean peak BFS of every level at least `min_extent_m` long, classified.
pub fn fingerprint_segments(trace: &BfsTrace, cfg: &SegmentConfig, db: &FingerprintDb) -> Vec<SegmentFingerprint> {
    segment_levels(trace, cfg)
        .into_iter()
        .filter(|l| l.extent_m() >= cfg.min_extent_m)
        .map(|l| SegmentFingerprint {
            start_m: l.start_m,
            end_m: l.end_m,
            mean_bfs_hz: l.mean_hz,
            label: db.classify(l.mean_hz),
        })
        .collect()
}

pub fn fingerprint_table(rows: &[SegmentFingerprint], config_digest: &str) -> String {
    let mut out = String::from("# bocda-fingerprint/1\n");
    out.push_str(&format!("# config_digest: {config_digest}\n"));
    out.push_str("start_m,end_m,mean_bfs_hz,label\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.start_m, r.end_m, r.mean_bfs_hz, r.label));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioMode {
    Analyze,
    Fingerprint,
    CompareOtdr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRun {
    pub name: String,
    pub channel: Channel,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerprintTable {
    pub entries: BTreeMap<String, FingerprintEntry>,
}

/// A figure scenario as stored under `scenarios/<name>/scenario.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub description: String,
    pub mode: ScenarioMode,
    #[serde(default)]
    pub seed: u64,
    pub scan: ScanConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub otdr: OtdrConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprints: Option<FingerprintTable>,
    pub runs: Vec<ScenarioRun>,
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(format!("scenario: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn db(&self) -> Result<Option<FingerprintDb>> {
        self.fingerprints.as_ref().map(|f| FingerprintDb::new(f.entries.clone())).transpose()
    }
}

/// Named output file held in memory until the whole run succeeded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(path: impl Into<String>, text: String) -> Self {
        Self { path: path.into(), bytes: text.into_bytes() }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializes") + "\n"
}

/// Noisy sonogram of `channel` with the noise stream named `stream` under `seed`.
pub fn simulate(channel: &Channel, scan: &ScanConfig, seed: u64, stream: &str) -> Result<Sonogram> {
    let mut cfg = scan.clone();
    cfg.seed = sub_seed(seed, stream);
    let clean = synthesize_noiseless(channel, &cfg)?;
    Ok(apply_noise(&clean, &cfg.noise, cfg.seed, channel))
}

fn sonogram_artifacts(prefix: &str, s: &Sonogram) -> Vec<Artifact> {
    vec![
        Artifact::text(format!("{prefix}sonogram.txt"), s.to_text()),
        Artifact::text(format!("{prefix}sonogram.meta.json"), s.meta_json()),
    ]
}

/// Summary of one compare-otdr run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub bocda_events: usize,
    pub bocda_bend_events: usize,
    pub otdr_events: usize,
    pub otdr_threshold_db: f64,
    pub otdr_noise_sigma_db: f64,
    pub otdr_n_traces: usize,
}

/// All artifacts of `scenario` under `seed`, in a fixed order.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> Result<Vec<Artifact>> {
    let db = scenario.db()?;
    let mut out = Vec::new();
    let mut summary = BTreeMap::new();
    for run in &scenario.runs {
        let ch = &run.channel;
        let prefix = format!("{}/", run.name);
        let s = simulate(ch, &scenario.scan, seed, &format!("sonogram/{}", run.name))?;
        let reference_channel = ch.without_taps();
        let r = simulate(&reference_channel, &scenario.scan, seed, &format!("reference/{}", run.name))?;
        let a = analyze(&s, Some(&r), ch, &scenario.analysis, db.as_ref())?;
        out.push(Artifact::text(format!("{prefix}channel.toml"), ch.to_toml_string()));
        out.extend(sonogram_artifacts(&prefix, &s));
        out.extend(sonogram_artifacts(&format!("{prefix}reference_"), &r));
        out.push(Artifact::text(format!("{prefix}trace.csv"), a.trace.to_text()));
        if let Some(g) = &a.gain {
            out.push(Artifact::text(format!("{prefix}gainmap.txt"), g.to_text()));
        }
        out.push(Artifact::text(format!("{prefix}report.json"), a.report.to_json()));
        let mut entry = serde_json::Map::new();
        entry.insert("events".into(), serde_json::to_value(&a.report.events).expect("serializes"));
        match scenario.mode {
            ScenarioMode::Analyze => {}
            ScenarioMode::Fingerprint => {
                let db = db.as_ref().ok_or_else(|| Error::Domain("fingerprint scenario needs a database".into()))?;
                let rows = fingerprint_segments(&a.trace, &scenario.analysis.segment, db);
                out.push(Artifact::text(
                    format!("{prefix}fingerprint.csv"),
                    fingerprint_table(&rows, &s.meta.config_digest),
                ));
                entry.insert("fingerprints".into(), serde_json::to_value(&rows).expect("serializes"));
            }
            ScenarioMode::CompareOtdr => {
                let traces = simulate_with(ch, &scenario.otdr, sub_seed(seed, &format!("otdr/{}", run.name)))?;
                let otdr_events = otdr_detect(&traces, scenario.otdr.threshold_db)?;
                let mean = mean_trace(&traces)?;
                out.push(Artifact::text(format!("{prefix}otdr_mean.csv"), mean.to_text()));
                let otdr_report = compile_report(
                    otdr_events,
                    ReportMeta {
                        config_digest: mean.config_digest.clone(),
                        channel_length_m: ch.length(),
                        resolution_m: crate::otdr::pulse_extent(ch, scenario.otdr.pulse_width_s),
                        source: "otdr".into(),
                        scan: None,
                        thresholds: BTreeMap::from([
                            ("threshold_db".to_string(), scenario.otdr.threshold_db),
                            ("noise_sigma_db".to_string(), scenario.otdr.noise_sigma_db),
                        ]),
                    },
                );
                out.push(Artifact::text(format!("{prefix}otdr_report.json"), otdr_report.to_json()));
                let cmp = Comparison {
                    bocda_events: a.report.events.len(),
                    bocda_bend_events: a.report.count(EventKind::BendTap),
                    otdr_events: otdr_report.events.len(),
                    otdr_threshold_db: scenario.otdr.threshold_db,
                    otdr_noise_sigma_db: scenario.otdr.noise_sigma_db,
                    otdr_n_traces: scenario.otdr.n_traces,
                };
                entry.insert("comparison".into(), serde_json::to_value(&cmp).expect("serializes"));
            }
        }
        summary.insert(run.name.clone(), serde_json::Value::Object(entry));
    }
    let summary = serde_json::json!({
        "description": scenario.description,
        "seed": seed,
        "runs": summary,
    });
    out.push(Artifact::text("summary.json", json(&summary)));
    Ok(out)
}

/// Events of `kind` in `events`.
pub fn of_kind(events: &[Event], kind: EventKind) -> Vec<&Event> {
    events.iter().filter(|e| e.kind == kind).collect()
}
