//! Sonogram container and its text serialization.
//!
//! The text file holds the grids in `#` header lines and the intensity
//! matrix in the body, one position per line, values separated by single
//! spaces. Floats are written in shortest round-trip form, so reading a file
//! back reproduces every value bit for bit. A JSON sidecar next to it carries
//! the scan configuration and the digests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::ScanConfig;

pub const SONOGRAM_FORMAT: &str = "bocda-sonogram/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SonogramMeta {
    pub format: String,
    pub scan: ScanConfig,
    pub channel_digest: String,
    pub config_digest: String,
    pub channel_length_m: f64,
    pub z_offset_m: f64,
    pub resolution_m: f64,
    pub f_m_hz: Vec<f64>,
    pub noise_applied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sonogram {
    pub positions: Vec<f64>,
    pub detunings: Vec<f64>,
    /// Row-major `[position][detuning]`.
    pub intensity: Vec<f64>,
    pub meta: SonogramMeta,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split_whitespace().map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("{what}: `{t}`: {e}")))).collect()
}

/// Sidecar path `<stem>.meta.json` next to a sonogram text file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

impl Sonogram {
    pub fn n_positions(&self) -> usize {
        self.positions.len()
    }

    pub fn n_detunings(&self) -> usize {
        self.detunings.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.detunings.len();
        &self.intensity[i * n..(i + 1) * n]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.intensity[i * self.detunings.len() + j]
    }

    pub fn max_intensity(&self) -> f64 {
        self.intensity.iter().copied().fold(0.0, f64::max)
    }

    /// Same grids, intensity multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut s = self.clone();
        s.intensity.iter_mut().for_each(|x| *x *= k);
        s
    }

    pub fn check_shape(&self) -> Result<()> {
        if self.intensity.len() != self.positions.len() * self.detunings.len() {
            return Err(Error::GridMismatch(format!(
                "intensity has {} values for a {}x{} grid",
                self.intensity.len(),
                self.positions.len(),
                self.detunings.len()
            )));
        }
        if self.intensity.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Parse("sonogram intensity must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {SONOGRAM_FORMAT}\n"));
        out.push_str(&format!("# config_digest: {}\n", self.meta.config_digest));
        out.push_str(&format!("# channel_digest: {}\n", self.meta.channel_digest));
        out.push_str("# rows: position (m); columns: probe detuning (Hz); values: Brillouin intensity (arb. units)\n");
        out.push_str(&format!("# positions_m: {}\n", join(&self.positions)));
        out.push_str(&format!("# detunings_hz: {}\n", join(&self.detunings)));
        for i in 0..self.positions.len() {
            out.push_str(&join(self.row(i)));
            out.push('\n');
        }
        out
    }

    pub fn meta_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.meta).expect("meta serializes");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str, meta_json: &str) -> Result<Self> {
        let meta: SonogramMeta =
            serde_json::from_str(meta_json).map_err(|e| Error::Parse(format!("sonogram sidecar: {e}")))?;
        let mut positions = None;
        let mut detunings = None;
        let mut digest = None;
        let mut intensity = Vec::new();
        let mut rows = 0usize;
        for line in text.lines() {
            if let Some(h) = line.strip_prefix('#') {
                let h = h.trim();
                if let Some(v) = h.strip_prefix("positions_m:") {
                    positions = Some(parse_floats(v, "positions_m")?);
                } else if let Some(v) = h.strip_prefix("detunings_hz:") {
                    detunings = Some(parse_floats(v, "detunings_hz")?);
                } else if let Some(v) = h.strip_prefix("config_digest:") {
                    digest = Some(v.trim().to_string());
                }
            } else if !line.trim().is_empty() {
                intensity.extend(parse_floats(line, "intensity row")?);
                rows += 1;
            }
        }
        let positions = positions.ok_or_else(|| Error::Parse("sonogram: missing positions_m header".into()))?;
        let detunings = detunings.ok_or_else(|| Error::Parse("sonogram: missing detunings_hz header".into()))?;
        if rows != positions.len() {
            return Err(Error::GridMismatch(format!("{rows} rows for {} positions", positions.len())));
        }
        if digest.as_deref() != Some(meta.config_digest.as_str()) {
            return Err(Error::Parse("sonogram text and sidecar carry different config digests".into()));
        }
        let s = Sonogram { positions, detunings, intensity, meta };
        s.check_shape()?;
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))?;
        let side = sidecar_path(path);
        std::fs::write(&side, self.meta_json()).map_err(|e| Error::io(&side, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let side = sidecar_path(path);
        let meta = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        Self::from_text(&text, &meta)
    }
}
