//! Declarative fiber channel model.
//!
//! A [`Channel`] is an ordered list of [`FiberSegment`]s that partition
//! `[0, L]`, plus point and extended [`Feature`]s that modify the local
//! opto-acoustic coupling, the Brillouin resonance or the transmission.
//!
//! Channel files are TOML:
//!
//! ```toml
//! wavelength_m = 1.55e-6
//!
//! [[segments]]
//! label = "SMF28"
//! length_m = 3.0
//! n_eff = 1.4682
//! n_g = 1.468
//! v_ac_mps = 5727.0
//! linewidth_hz = 27e6
//! gain_coeff = 1.0
//! atten_db_per_m = 0.0
//!
//! [[features]]
//! kind = "BendTap"
//! position_m = 1.5
//! params = { loss_fraction = 0.01, extent_m = 0.1 }
//! ```
//!
//! Unknown keys are rejected at every level, including feature `params`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Speed of light in vacuum, m/s.
pub const C_VACUUM: f64 = 299_792_458.0;
/// Group index giving the 146 m correlation spacing at 699 kHz.
pub const DEFAULT_GROUP_INDEX: f64 = 1.468;
/// Brillouin gain linewidth (FWHM) of standard single-mode fiber, Hz.
pub const DEFAULT_LINEWIDTH_HZ: f64 = 27e6;
/// Default multiplier `k` of the in-extent coupling suppression `1 - k*loss`.
pub const DEFAULT_BEND_COUPLING_FACTOR: f64 = 16.0;
/// Absolute tolerance for partition and length checks, m.
pub const LENGTH_TOLERANCE_M: f64 = 1e-6;

/// Brillouin frequency shift `(2/λ)·n_eff·v_ac` in Hz.
///
/// Zero acoustic velocity gives 0 Hz; negative or non-finite inputs and a
/// non-positive index or wavelength are domain errors.
pub fn brillouin_shift(n_eff: f64, v_ac: f64, wavelength: f64) -> Result<f64> {
    if !(n_eff.is_finite() && v_ac.is_finite() && wavelength.is_finite()) {
        return Err(Error::Domain("brillouin_shift: non-finite input".into()));
    }
    if n_eff <= 0.0 || wavelength <= 0.0 {
        return Err(Error::Domain(format!(
            "brillouin_shift: n_eff ({n_eff}) and wavelength ({wavelength}) must be positive"
        )));
    }
    if v_ac < 0.0 {
        return Err(Error::Domain(format!("brillouin_shift: negative acoustic velocity {v_ac}")));
    }
    Ok(2.0 / wavelength * n_eff * v_ac)
}

fn default_n_g() -> f64 {
    DEFAULT_GROUP_INDEX
}
fn default_linewidth() -> f64 {
    DEFAULT_LINEWIDTH_HZ
}
fn default_one() -> f64 {
    1.0
}
fn default_k() -> f64 {
    DEFAULT_BEND_COUPLING_FACTOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSegment {
    pub length_m: f64,
    pub n_eff: f64,
    #[serde(default = "default_n_g")]
    pub n_g: f64,
    pub v_ac_mps: f64,
    #[serde(default = "default_linewidth")]
    pub linewidth_hz: f64,
    #[serde(default = "default_one")]
    pub gain_coeff: f64,
    #[serde(default)]
    pub atten_db_per_m: f64,
    #[serde(default)]
    pub label: String,
    /// Optional explicit start; when present it must match the running sum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_m: Option<f64>,
    /// Rayleigh backscatter offset relative to the channel reference, dB.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub backscatter_offset_db: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl FiberSegment {
    /// SMF28-like segment of the given length.
    pub fn smf28(length_m: f64) -> Self {
        Self {
            length_m,
            n_eff: 1.4682,
            n_g: DEFAULT_GROUP_INDEX,
            v_ac_mps: 5727.0,
            linewidth_hz: DEFAULT_LINEWIDTH_HZ,
            gain_coeff: 1.0,
            atten_db_per_m: 0.0,
            label: "SMF28".into(),
            start_m: None,
            backscatter_offset_db: 0.0,
        }
    }

    pub fn bfs(&self, wavelength: f64) -> Result<f64> {
        brillouin_shift(self.n_eff, self.v_ac_mps, wavelength)
    }

    /// Acoustic velocity that puts this segment's BFS at `bfs_hz`.
    pub fn with_bfs(mut self, bfs_hz: f64, wavelength: f64) -> Self {
        self.v_ac_mps = bfs_hz * wavelength / (2.0 * self.n_eff);
        self
    }

    pub fn group_velocity(&self) -> f64 {
        C_VACUUM / self.n_g
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureKind {
    /// Mated connector pair: insertion loss plus a ferrule-scale BFS excursion.
    Connector {
        insertion_loss_db: f64,
        bfs_excursion_hz: f64,
        width_m: f64,
    },
    SpliceJoint {
        insertion_loss_db: f64,
    },
    /// In-line splitter diverting `split_fraction` of the power.
    TapCoupler {
        split_fraction: f64,
        bfs_excursion_hz: f64,
        width_m: f64,
    },
    /// Evanescent outcoupling by bending over `extent_m`.
    BendTap {
        loss_fraction: f64,
        extent_m: f64,
    },
}

impl FeatureKind {
    pub fn name(&self) -> &'static str {
        match self {
            FeatureKind::Connector { .. } => "Connector",
            FeatureKind::SpliceJoint { .. } => "SpliceJoint",
            FeatureKind::TapCoupler { .. } => "TapCoupler",
            FeatureKind::BendTap { .. } => "BendTap",
        }
    }

    pub fn is_point(&self) -> bool {
        !matches!(self, FeatureKind::BendTap { .. })
    }

    /// Features an eavesdropper adds; removed when building a reference channel.
    pub fn is_tap(&self) -> bool {
        matches!(self, FeatureKind::BendTap { .. } | FeatureKind::TapCoupler { .. })
    }

    /// Power transmission factor across the fully passed feature.
    pub fn through_transmission(&self) -> f64 {
        match *self {
            FeatureKind::Connector { insertion_loss_db, .. } | FeatureKind::SpliceJoint { insertion_loss_db } => {
                10f64.powf(-insertion_loss_db / 10.0)
            }
            FeatureKind::TapCoupler { split_fraction, .. } => 1.0 - split_fraction,
            FeatureKind::BendTap { loss_fraction, .. } => 1.0 - loss_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFeature", into = "RawFeature")]
pub struct Feature {
    pub kind: FeatureKind,
    pub position_m: f64,
}

impl Feature {
    pub fn connector(position_m: f64) -> Self {
        Self {
            kind: FeatureKind::Connector { insertion_loss_db: 0.2, bfs_excursion_hz: 8e6, width_m: 0.01 },
            position_m,
        }
    }

    pub fn splice(position_m: f64) -> Self {
        Self { kind: FeatureKind::SpliceJoint { insertion_loss_db: 0.02 }, position_m }
    }

    pub fn tap_coupler(position_m: f64, split_fraction: f64) -> Self {
        Self { kind: FeatureKind::TapCoupler { split_fraction, bfs_excursion_hz: 5e6, width_m: 0.01 }, position_m }
    }

    pub fn bend(position_m: f64, loss_fraction: f64, extent_m: f64) -> Self {
        Self { kind: FeatureKind::BendTap { loss_fraction, extent_m }, position_m }
    }

    /// Transmission factor applied to light that has travelled from 0 to `z`.
    fn transmission_upto(&self, z: f64) -> f64 {
        match self.kind {
            FeatureKind::BendTap { loss_fraction, extent_m } => {
                let x = (z - (self.position_m - extent_m / 2.0)) / extent_m;
                if x <= 0.0 {
                    1.0
                } else if x >= 1.0 {
                    1.0 - loss_fraction
                } else {
                    1.0 - loss_fraction * smooth_ramp(x)
                }
            }
            _ if z > self.position_m => self.kind.through_transmission(),
            _ => 1.0,
        }
    }

    fn coupling_factor(&self, z: f64, k: f64) -> f64 {
        match self.kind {
            FeatureKind::BendTap { loss_fraction, extent_m } => {
                let d = z - self.position_m;
                if d.abs() >= extent_m / 2.0 {
                    1.0
                } else {
                    let s = 0.5 * (1.0 + (std::f64::consts::TAU * d / extent_m).cos());
                    (1.0 - k * loss_fraction * s).max(0.0)
                }
            }
            _ => 1.0,
        }
    }

    fn bfs_shift(&self, z: f64) -> f64 {
        match self.kind {
            FeatureKind::Connector { bfs_excursion_hz, width_m, .. }
            | FeatureKind::TapCoupler { bfs_excursion_hz, width_m, .. } => {
                // width is the FWHM of a Gaussian profile
                let sigma = width_m / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
                let d = (z - self.position_m) / sigma;
                if d.abs() > 12.0 {
                    0.0
                } else {
                    bfs_excursion_hz * (-0.5 * d * d).exp()
                }
            }
            _ => 0.0,
        }
    }
}

/// Monotone C¹ ramp from 0 to 1 on [0, 1] whose derivative is the raised cosine.
fn smooth_ramp(x: f64) -> f64 {
    x - (std::f64::consts::TAU * x).sin() / std::f64::consts::TAU
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeature {
    kind: String,
    position_m: f64,
    #[serde(default)]
    params: serde_json::Map<String, serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConnectorParams {
    #[serde(default = "ConnectorParams::il")]
    insertion_loss_db: f64,
    #[serde(default = "ConnectorParams::exc")]
    bfs_excursion_hz: f64,
    #[serde(default = "ConnectorParams::width")]
    width_m: f64,
}
impl ConnectorParams {
    fn il() -> f64 {
        0.2
    }
    fn exc() -> f64 {
        8e6
    }
    fn width() -> f64 {
        0.01
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpliceParams {
    #[serde(default = "SpliceParams::il")]
    insertion_loss_db: f64,
}
impl SpliceParams {
    fn il() -> f64 {
        0.02
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TapParams {
    split_fraction: f64,
    #[serde(default = "TapParams::exc")]
    bfs_excursion_hz: f64,
    #[serde(default = "ConnectorParams::width")]
    width_m: f64,
}
impl TapParams {
    fn exc() -> f64 {
        5e6
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BendParams {
    loss_fraction: f64,
    #[serde(default = "BendParams::extent")]
    extent_m: f64,
}
impl BendParams {
    fn extent() -> f64 {
        0.1
    }
}

fn parse_params<T: serde::de::DeserializeOwned>(
    kind: &str,
    p: serde_json::Map<String, serde_json::Value>,
) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::Object(p)).map_err(|e| format!("{kind} params: {e}"))
}

impl TryFrom<RawFeature> for Feature {
    type Error = String;

    fn try_from(raw: RawFeature) -> std::result::Result<Self, String> {
        let kind = match raw.kind.as_str() {
            "Connector" => {
                let p: ConnectorParams = parse_params(&raw.kind, raw.params)?;
                FeatureKind::Connector {
                    insertion_loss_db: p.insertion_loss_db,
                    bfs_excursion_hz: p.bfs_excursion_hz,
                    width_m: p.width_m,
                }
            }
            "SpliceJoint" => {
                let p: SpliceParams = parse_params(&raw.kind, raw.params)?;
                FeatureKind::SpliceJoint { insertion_loss_db: p.insertion_loss_db }
            }
            "TapCoupler" => {
                let p: TapParams = parse_params(&raw.kind, raw.params)?;
                FeatureKind::TapCoupler {
                    split_fraction: p.split_fraction,
                    bfs_excursion_hz: p.bfs_excursion_hz,
                    width_m: p.width_m,
                }
            }
            "BendTap" => {
                let p: BendParams = parse_params(&raw.kind, raw.params)?;
                FeatureKind::BendTap { loss_fraction: p.loss_fraction, extent_m: p.extent_m }
            }
            other => return Err(format!("unknown feature kind `{other}`")),
        };
        Ok(Feature { kind, position_m: raw.position_m })
    }
}

impl From<Feature> for RawFeature {
    fn from(f: Feature) -> Self {
        let params = match f.kind {
            FeatureKind::Connector { insertion_loss_db, bfs_excursion_hz, width_m } => {
                serde_json::to_value(ConnectorParams { insertion_loss_db, bfs_excursion_hz, width_m })
            }
            FeatureKind::SpliceJoint { insertion_loss_db } => serde_json::to_value(SpliceParams { insertion_loss_db }),
            FeatureKind::TapCoupler { split_fraction, bfs_excursion_hz, width_m } => {
                serde_json::to_value(TapParams { split_fraction, bfs_excursion_hz, width_m })
            }
            FeatureKind::BendTap { loss_fraction, extent_m } => {
                serde_json::to_value(BendParams { loss_fraction, extent_m })
            }
        };
        let params = match params {
            Ok(serde_json::Value::Object(m)) => m,
            _ => serde_json::Map::new(),
        };
        RawFeature { kind: f.kind.name().into(), position_m: f.position_m, params }
    }
}

/// Local parameters seen by the acoustic interaction at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalParams {
    /// Brillouin shift of the owning segment. Features never alter it.
    pub bfs: f64,
    /// Additional resonance excursion from point features (connectors, couplers).
    pub feature_shift: f64,
    pub linewidth: f64,
    pub coupling: f64,
    pub transmission_to_z: f64,
    pub n_g: f64,
}

impl LocalParams {
    /// Centre of the local gain resonance.
    pub fn resonance(&self) -> f64 {
        self.bfs + self.feature_shift
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    pub wavelength_m: f64,
    /// Declared total length; when present it must equal the segment sum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_m: Option<f64>,
    #[serde(default = "default_k")]
    pub bend_coupling_factor: f64,
    pub segments: Vec<FiberSegment>,
    #[serde(default)]
    pub features: Vec<Feature>,
}

impl Channel {
    pub fn new(wavelength_m: f64, segments: Vec<FiberSegment>) -> Self {
        Self {
            wavelength_m,
            length_m: None,
            bend_coupling_factor: DEFAULT_BEND_COUPLING_FACTOR,
            segments,
            features: Vec::new(),
        }
    }

    pub fn with_feature(mut self, f: Feature) -> Self {
        self.features.push(f);
        self.features.sort_by(|a, b| a.position_m.total_cmp(&b.position_m));
        self
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(format!("channel: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("channel serializes")
    }

    /// Total length as the sum of segment lengths.
    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length_m).sum()
    }

    /// Segment start positions followed by the channel end.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.segments.len() + 1);
        let mut acc = 0.0;
        b.push(acc);
        for s in &self.segments {
            acc += s.length_m;
            b.push(acc);
        }
        b
    }

    /// Index of the segment owning `z`; a boundary belongs to the segment it starts.
    pub fn segment_index(&self, z: f64) -> usize {
        let mut acc = 0.0;
        for (i, s) in self.segments.iter().enumerate() {
            acc += s.length_m;
            if z < acc {
                return i;
            }
        }
        self.segments.len().saturating_sub(1)
    }

    pub fn min_linewidth(&self) -> f64 {
        self.segments.iter().map(|s| s.linewidth_hz).fold(f64::INFINITY, f64::min)
    }

    /// Copy without bend taps and tap couplers.
    pub fn without_taps(&self) -> Self {
        let mut c = self.clone();
        c.features.retain(|f| !f.kind.is_tap());
        c
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        crate::digest::of_json(self)
    }

    /// Optical path coordinate `∫₀ᶻ n_g/n_ref dz'`.
    pub fn apparent_coordinate(&self, z: f64, n_ref: f64) -> f64 {
        let mut acc = 0.0;
        let mut start = 0.0;
        for s in &self.segments {
            let end = start + s.length_m;
            if z <= end {
                return acc + (z - start).max(0.0) * s.n_g / n_ref;
            }
            acc += s.length_m * s.n_g / n_ref;
            start = end;
        }
        acc + (z - start) * self.segments.last().map_or(1.0, |s| s.n_g) / n_ref
    }

    /// Attenuation-only transmission from 0 to `z`.
    fn attenuation_to(&self, z: f64) -> f64 {
        let mut db = 0.0;
        let mut start = 0.0;
        for s in &self.segments {
            let end = start + s.length_m;
            let len = (z.min(end) - start).max(0.0);
            db += s.atten_db_per_m * len;
            if z <= end {
                break;
            }
            start = end;
        }
        10f64.powf(-db / 10.0)
    }

    /// One-way power transmission from the channel start to `z`.
    pub fn transmission_to(&self, z: f64) -> f64 {
        let mut t = self.attenuation_to(z);
        for f in &self.features {
            t *= f.transmission_upto(z);
        }
        t
    }

    /// Local parameters at `z`.
    pub fn local_profile(&self, z: f64) -> Result<LocalParams> {
        let l = self.length();
        if !(z.is_finite() && z >= -LENGTH_TOLERANCE_M && z <= l + LENGTH_TOLERANCE_M) {
            return Err(Error::Domain(format!("z = {z} m outside channel [0, {l}]")));
        }
        let seg =
            self.segments.get(self.segment_index(z)).ok_or_else(|| Error::Domain("channel has no segments".into()))?;
        let mut coupling = seg.gain_coeff;
        let mut shift = 0.0;
        for f in &self.features {
            coupling *= f.coupling_factor(z, self.bend_coupling_factor);
            shift += f.bfs_shift(z);
        }
        Ok(LocalParams {
            bfs: seg.bfs(self.wavelength_m)?,
            feature_shift: shift,
            linewidth: seg.linewidth_hz,
            coupling,
            transmission_to_z: self.transmission_to(z),
            n_g: seg.n_g,
        })
    }

    /// Check every structural invariant; empty iff the channel is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        validate_channel(self)
    }
}

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    x.is_finite() && x >= lo && x <= hi
}

/// All invariant violations of `channel`.
pub fn validate_channel(channel: &Channel) -> Vec<Violation> {
    let mut v = Vec::new();
    if !(channel.wavelength_m.is_finite() && channel.wavelength_m > 0.0) {
        v.push(Violation::new("channel", "wavelength", "wavelength_m must be positive"));
    }
    if !(channel.bend_coupling_factor.is_finite() && channel.bend_coupling_factor >= 0.0) {
        v.push(Violation::new("channel", "bend_coupling_factor", "must be finite and non-negative"));
    }
    if channel.segments.is_empty() {
        v.push(Violation::new("channel", "partition", "at least one segment is required"));
    }
    let mut acc = 0.0;
    for (i, s) in channel.segments.iter().enumerate() {
        let name = if s.label.is_empty() { format!("segment[{i}]") } else { format!("segment[{i}] ({})", s.label) };
        if !(s.length_m.is_finite() && s.length_m > 0.0) {
            v.push(Violation::new(&name, "length", format!("length_m = {} must be > 0", s.length_m)));
        }
        if !in_range(s.n_eff, 1.0, 2.0) {
            v.push(Violation::new(&name, "n_eff", format!("n_eff = {} outside [1, 2]", s.n_eff)));
        }
        if !in_range(s.n_g, 1.0, 2.0) {
            v.push(Violation::new(&name, "n_g", format!("n_g = {} outside [1, 2]", s.n_g)));
        }
        if !(s.v_ac_mps.is_finite() && s.v_ac_mps > 0.0) {
            v.push(Violation::new(&name, "v_ac", format!("v_ac_mps = {} must be > 0", s.v_ac_mps)));
        }
        if !(s.linewidth_hz.is_finite() && s.linewidth_hz > 0.0) {
            v.push(Violation::new(&name, "linewidth", format!("linewidth_hz = {} must be > 0", s.linewidth_hz)));
        }
        if !(s.gain_coeff.is_finite() && s.gain_coeff >= 0.0) {
            v.push(Violation::new(&name, "gain_coeff", format!("gain_coeff = {} must be >= 0", s.gain_coeff)));
        }
        if !(s.atten_db_per_m.is_finite() && s.atten_db_per_m >= 0.0) {
            v.push(Violation::new(&name, "attenuation", format!("atten_db_per_m = {} must be >= 0", s.atten_db_per_m)));
        }
        if let Some(start) = s.start_m {
            if (start - acc).abs() > LENGTH_TOLERANCE_M {
                let what = if start < acc {
                    "overlaps the previous segment"
                } else {
                    "leaves a gap after the previous segment"
                };
                v.push(Violation::new(&name, "partition", format!("start_m = {start} {what} (expected {acc})")));
            }
        }
        acc += s.length_m;
    }
    let total = acc;
    if let Some(l) = channel.length_m {
        if (l - total).abs() > LENGTH_TOLERANCE_M {
            v.push(Violation::new("channel", "partition", format!("segments sum to {total} m but length_m = {l}")));
        }
    }
    let mut prev: Option<&Feature> = None;
    for (i, f) in channel.features.iter().enumerate() {
        let name = format!("feature[{i}] ({})", f.kind.name());
        if !in_range(f.position_m, 0.0, total) {
            v.push(Violation::new(&name, "position", format!("position_m = {} outside [0, {total}]", f.position_m)));
        }
        match f.kind {
            FeatureKind::TapCoupler { split_fraction, width_m, .. } => {
                if !(split_fraction > 0.0 && split_fraction <= 0.5) {
                    v.push(Violation::new(&name, "split_fraction", format!("{split_fraction} outside (0, 0.5]")));
                }
                if !(width_m.is_finite() && width_m > 0.0) {
                    v.push(Violation::new(&name, "width", "width_m must be > 0"));
                }
            }
            FeatureKind::BendTap { loss_fraction, extent_m } => {
                if !(loss_fraction > 0.0 && loss_fraction <= 0.5) {
                    v.push(Violation::new(&name, "loss_fraction", format!("{loss_fraction} outside (0, 0.5]")));
                }
                if !(extent_m.is_finite() && extent_m > 0.0) {
                    v.push(Violation::new(&name, "extent", "extent_m must be > 0"));
                }
            }
            FeatureKind::Connector { insertion_loss_db, width_m, .. } => {
                if !(insertion_loss_db.is_finite() && insertion_loss_db >= 0.0) {
                    v.push(Violation::new(&name, "insertion_loss", "insertion_loss_db must be >= 0"));
                }
                if !(width_m.is_finite() && width_m > 0.0) {
                    v.push(Violation::new(&name, "width", "width_m must be > 0"));
                }
            }
            FeatureKind::SpliceJoint { insertion_loss_db } => {
                if !(insertion_loss_db.is_finite() && insertion_loss_db >= 0.0) {
                    v.push(Violation::new(&name, "insertion_loss", "insertion_loss_db must be >= 0"));
                }
            }
        }
        if let Some(p) = prev {
            if f.position_m < p.position_m {
                v.push(Violation::new(&name, "order", "features must be sorted by position"));
            } else if f.position_m == p.position_m && f.kind.is_point() && p.kind.is_point() {
                v.push(Violation::new(&name, "position", "two point features share a position"));
            }
        }
        prev = Some(f);
    }
    v
}
