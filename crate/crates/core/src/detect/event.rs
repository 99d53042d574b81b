use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    BendTap,
    PointFeature,
    ForeignSegment,
    /// Step or spike found by the reflectometry baseline.
    OtdrStep,
}

/// A located event.
///
/// `magnitude` is kind specific: estimated loss fraction for `BendTap`, BFS
/// excursion in Hz for `PointFeature`, mean BFS offset in Hz for
/// `ForeignSegment`, power step in dB for `OtdrStep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub position_m: f64,
    pub extent_m: f64,
    pub magnitude: f64,
    pub confidence: f64,
    /// Mean peak BFS inside a foreign segment, Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_hz: Option<f64>,
    /// Fingerprint classification, when one was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Event {
    pub fn new(kind: EventKind, position_m: f64, extent_m: f64, magnitude: f64, confidence: f64) -> Self {
        Self {
            kind,
            position_m,
            extent_m,
            magnitude,
            confidence: confidence.clamp(0.0, 1.0),
            level_hz: None,
            label: None,
        }
    }

    pub fn start_m(&self) -> f64 {
        self.position_m - self.extent_m / 2.0
    }

    pub fn end_m(&self) -> f64 {
        self.position_m + self.extent_m / 2.0
    }
}

/// Confidence from how far a statistic clears its threshold.
pub(crate) fn margin_confidence(stat: f64, threshold: f64) -> f64 {
    if stat <= 0.0 || threshold <= 0.0 {
        return 1.0;
    }
    (1.0 - (threshold / stat).powi(2)).clamp(0.0, 1.0)
}
