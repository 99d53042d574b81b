//! Scan configuration and its resolution against a channel.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kernel::resolution;
use crate::error::{Error, Result, Violation};
use crate::fiber::{Channel, C_VACUUM, DEFAULT_GROUP_INDEX};

/// Uniform grid `start, start + step, …` up to and including `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn len(&self) -> usize {
        if !(self.step > 0.0) || self.stop < self.start {
            return 0;
        }
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Standard deviation of the per-pixel multiplicative factor.
    #[serde(default = "NoiseModel::rel")]
    pub relative_sigma: f64,
    /// Additive floor standard deviation as a fraction of the noiseless maximum.
    #[serde(default = "NoiseModel::floor")]
    pub floor_fraction: f64,
}

fn yes() -> bool {
    true
}

impl NoiseModel {
    fn rel() -> f64 {
        0.02
    }
    fn floor() -> f64 {
        0.005
    }

    pub fn off() -> Self {
        Self { enabled: false, ..Self::default() }
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { enabled: true, relative_sigma: Self::rel(), floor_fraction: Self::floor() }
    }
}

fn d_delta_f() -> f64 {
    47e9
}
fn d_one() -> f64 {
    1.0
}
fn d_pump() -> f64 {
    C_VACUUM / 1.55e-6
}
fn d_order() -> u32 {
    1
}
fn d_fm() -> f64 {
    699e3
}
fn d_ng() -> f64 {
    DEFAULT_GROUP_INDEX
}

/// Scan settings. Positions are addressed either by an explicit list of
/// modulation frequencies or by a position grid converted to frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_m_sweep_hz: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions_m: Option<Sweep>,
    #[serde(default = "d_delta_f")]
    pub delta_f_hz: f64,
    pub probe_sweep_hz: Sweep,
    #[serde(default = "d_one")]
    pub pump_power: f64,
    #[serde(default = "d_one")]
    pub probe_power: f64,
    #[serde(default = "d_pump")]
    pub pump_frequency_hz: f64,
    #[serde(default = "d_order")]
    pub correlation_order: u32,
    /// Frame offset between the correlation-point coordinate and the fiber.
    /// When absent, `center_modulation_hz` addresses the channel midpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_offset_m: Option<f64>,
    #[serde(default = "d_fm")]
    pub center_modulation_hz: f64,
    /// Group index of the reference frame in which positions are reported.
    #[serde(default = "d_ng")]
    pub group_index: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration_step_m: Option<f64>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub seed: u64,
}

impl ScanConfig {
    /// Position-grid scan with the default modulation settings.
    pub fn with_positions(positions_m: Sweep, probe_sweep_hz: Sweep) -> Self {
        Self {
            f_m_sweep_hz: None,
            positions_m: Some(positions_m),
            delta_f_hz: d_delta_f(),
            probe_sweep_hz,
            pump_power: 1.0,
            probe_power: 1.0,
            pump_frequency_hz: d_pump(),
            correlation_order: 1,
            z_offset_m: None,
            center_modulation_hz: d_fm(),
            group_index: DEFAULT_GROUP_INDEX,
            integration_step_m: None,
            noise: NoiseModel::default(),
            seed: 0,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(format!("scan: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scan serializes")
    }

    pub fn reference_velocity(&self) -> f64 {
        C_VACUUM / self.group_index
    }

    /// Offset actually used for a channel of `length`.
    pub fn z_offset_for(&self, length: f64) -> f64 {
        self.z_offset_m.unwrap_or_else(|| {
            self.correlation_order as f64 * self.reference_velocity() / (2.0 * self.center_modulation_hz) - length / 2.0
        })
    }

    /// Correlation point of the configured order for modulation `f_m`.
    pub fn position_for(&self, f_m: f64, z_offset: f64) -> f64 {
        self.correlation_order as f64 * self.reference_velocity() / (2.0 * f_m) - z_offset
    }

    pub fn modulation_for(&self, z: f64, z_offset: f64) -> f64 {
        self.correlation_order as f64 * self.reference_velocity() / (2.0 * (z + z_offset))
    }

    /// Resolve the scan for a channel length and the narrowest linewidth present.
    pub fn resolve(&self, length: f64, min_linewidth: f64) -> Result<ResolvedScan> {
        let z_offset = self.z_offset_for(length);
        let f_m: Vec<f64> = match (&self.f_m_sweep_hz, &self.positions_m) {
            (Some(f), None) => f.clone(),
            (None, Some(p)) => p.values().into_iter().map(|z| self.modulation_for(z, z_offset)).collect(),
            (Some(_), Some(_)) => {
                return Err(Error::InvalidScan(vec![Violation::new(
                    "scan",
                    "addressing",
                    "give either f_m_sweep_hz or positions_m, not both",
                )]))
            }
            (None, None) => {
                return Err(Error::InvalidScan(vec![Violation::new(
                    "scan",
                    "addressing",
                    "one of f_m_sweep_hz or positions_m is required",
                )]))
            }
        };
        let positions: Vec<f64> = f_m.iter().map(|&f| self.position_for(f, z_offset)).collect();
        let f_max = f_m.iter().copied().fold(0.0, f64::max);
        let dz = resolution(min_linewidth, self.reference_velocity(), f_max, self.delta_f_hz);
        let step = self.integration_step_m.unwrap_or(dz / 4.0);
        let nodes = if step > 0.0 && length > 0.0 { (length / step).ceil().max(1.0) as usize } else { 1 };
        Ok(ResolvedScan {
            f_m,
            positions,
            detunings: self.probe_sweep_hz.values(),
            z_offset,
            v_ref: self.reference_velocity(),
            resolution: dz,
            nodes,
            length,
        })
    }
}

/// Concrete grids derived from a scan and a channel length.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScan {
    pub f_m: Vec<f64>,
    pub positions: Vec<f64>,
    pub detunings: Vec<f64>,
    pub z_offset: f64,
    pub v_ref: f64,
    pub resolution: f64,
    /// Number of midpoint quadrature nodes along the fiber.
    pub nodes: usize,
    pub length: f64,
}

impl ResolvedScan {
    pub fn node_step(&self) -> f64 {
        self.length / self.nodes as f64
    }

    pub fn node_positions(&self) -> Vec<f64> {
        let h = self.node_step();
        (0..self.nodes).map(|k| (k as f64 + 0.5) * h).collect()
    }
}

/// Violations of the scan invariants, including those relative to `channel`.
pub fn validate_scan(cfg: &ScanConfig, channel: &Channel) -> Vec<Violation> {
    let mut v = Vec::new();
    let pos = |x: f64| x.is_finite() && x > 0.0;
    let ps = cfg.probe_sweep_hz;
    if !pos(ps.step) {
        v.push(Violation::new("scan.probe_sweep_hz", "step", "step must be > 0"));
    }
    if !(ps.start.is_finite() && ps.stop.is_finite() && ps.stop >= ps.start) {
        v.push(Violation::new("scan.probe_sweep_hz", "range", "stop must be >= start"));
    }
    if !pos(cfg.delta_f_hz) {
        v.push(Violation::new("scan.delta_f_hz", "positive", "modulation bandwidth must be > 0"));
    }
    if !pos(cfg.pump_power) || !pos(cfg.probe_power) {
        v.push(Violation::new("scan", "power", "pump_power and probe_power must be > 0"));
    }
    if cfg.correlation_order == 0 {
        v.push(Violation::new("scan.correlation_order", "positive", "correlation order must be >= 1"));
    }
    if !pos(cfg.center_modulation_hz) {
        v.push(Violation::new("scan.center_modulation_hz", "positive", "must be > 0"));
    }
    if !(cfg.group_index.is_finite() && (1.0..=2.0).contains(&cfg.group_index)) {
        v.push(Violation::new("scan.group_index", "range", "group_index outside [1, 2]"));
    }
    let n = &cfg.noise;
    if !(n.relative_sigma.is_finite()
        && n.relative_sigma >= 0.0
        && n.floor_fraction.is_finite()
        && n.floor_fraction >= 0.0)
    {
        v.push(Violation::new("scan.noise", "non-negative", "noise levels must be >= 0"));
    }
    if let Some(p) = cfg.positions_m {
        if !pos(p.step) || p.stop < p.start {
            v.push(Violation::new("scan.positions_m", "grid", "positions need step > 0 and stop >= start"));
        }
    }
    if let Some(f) = &cfg.f_m_sweep_hz {
        if f.is_empty() || f.iter().any(|x| !pos(*x)) {
            v.push(Violation::new("scan.f_m_sweep_hz", "positive", "modulation frequencies must be > 0"));
        }
    }
    if !v.is_empty() {
        return v;
    }
    for (i, s) in channel.segments.iter().enumerate() {
        if let Ok(b) = s.bfs(channel.wavelength_m) {
            if b < ps.start || b > ps.stop {
                v.push(Violation::new(
                    format!("segment[{i}] ({})", s.label),
                    "probe_sweep",
                    format!("BFS {b} Hz outside probe sweep [{}, {}]", ps.start, ps.stop),
                ));
            }
        }
    }
    let length = channel.length();
    match cfg.resolve(length, channel.min_linewidth()) {
        Err(e) => v.extend(e.violations().iter().cloned()),
        Ok(r) => {
            if r.positions.is_empty() {
                v.push(Violation::new("scan", "positions", "scan addresses no positions"));
            }
            let spacing = r.v_ref / (2.0 * r.f_m.iter().copied().fold(0.0, f64::max));
            for (f, z) in r.f_m.iter().zip(&r.positions) {
                if !(*z >= -1e-9 && *z <= length + 1e-9) {
                    v.push(Violation::new(
                        "scan",
                        "correlation_point",
                        format!("f_m = {f} Hz puts its correlation point at {z} m, outside [0, {length}]"),
                    ));
                    break;
                }
            }
            if spacing <= length {
                v.push(Violation::new(
                    "scan",
                    "correlation_point",
                    format!("correlation spacing {spacing} m admits more than one point inside the {length} m channel"),
                ));
            }
            if let Some(h) = cfg.integration_step_m {
                if !(h > 0.0 && h <= r.resolution / 4.0 * (1.0 + 1e-12)) {
                    v.push(Violation::new(
                        "scan.integration_step_m",
                        "quadrature",
                        format!("step {h} m must be in (0, resolution/4 = {}]", r.resolution / 4.0),
                    ));
                }
            }
        }
    }
    v
}
