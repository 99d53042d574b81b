use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::event::{Event, EventKind};
use crate::forward::ScanConfig;

pub const REPORT_FORMAT: &str = "bocda-report/1";

/// Context an analysis ran in.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMeta {
    pub config_digest: String,
    pub channel_length_m: f64,
    /// Spatial resolution; events of one kind closer than this are merged.
    pub resolution_m: f64,
    /// `raw` or `deconvolved`.
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    pub thresholds: BTreeMap<String, f64>,
}

/// Stable JSON output of `analyze`.
///
/// Field names: `format`, `config_digest`, `channel_length_m`,
/// `resolution_m`, `source`, `scan`, `thresholds`, `events[]` with `kind`,
/// `position_m`, `extent_m`, `magnitude`, `confidence` and optional
/// `level_hz` and `label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub format: String,
    #[serde(flatten)]
    pub meta: ReportMeta,
    pub events: Vec<Event>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

fn merge(group: &[Event]) -> Event {
    let best = group.iter().max_by(|a, b| a.confidence.total_cmp(&b.confidence)).unwrap();
    let start = group.iter().map(Event::start_m).fold(f64::INFINITY, f64::min);
    let end = group.iter().map(Event::end_m).fold(f64::NEG_INFINITY, f64::max);
    let miss: f64 = group.iter().map(|e| 1.0 - e.confidence).product();
    let mut out = best.clone();
    out.extent_m = end - start;
    out.position_m = best.position_m.clamp(start, end);
    out.confidence = (1.0 - miss).clamp(0.0, 1.0);
    out
}

/// Merge same-kind events within one resolution cell, sort by position and
/// attach the metadata.
pub fn compile_report(events: Vec<Event>, meta: ReportMeta) -> AnalysisReport {
    let mut by_kind: BTreeMap<EventKind, Vec<Event>> = BTreeMap::new();
    for e in events {
        by_kind.entry(e.kind).or_default().push(e);
    }
    let mut out = Vec::new();
    for (_, mut list) in by_kind {
        list.sort_by(|a, b| a.position_m.total_cmp(&b.position_m));
        let mut group: Vec<Event> = Vec::new();
        for e in list {
            if let Some(last) = group.last() {
                if e.position_m - last.position_m > meta.resolution_m {
                    out.push(merge(&group));
                    group.clear();
                }
            }
            group.push(e);
        }
        if !group.is_empty() {
            out.push(merge(&group));
        }
    }
    out.sort_by(|a, b| a.position_m.total_cmp(&b.position_m).then(a.kind.cmp(&b.kind)));
    AnalysisReport { format: REPORT_FORMAT.to_string(), meta, events: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ReportMeta {
        ReportMeta { resolution_m: 0.027, channel_length_m: 3.0, ..Default::default() }
    }

    #[test]
    fn close_events_merge() {
        let ev = vec![
            Event::new(EventKind::BendTap, 1.50, 0.1, 0.01, 0.5),
            Event::new(EventKind::BendTap, 1.51, 0.1, 0.012, 0.6),
        ];
        let r = compile_report(ev, meta());
        assert_eq!(r.events.len(), 1);
        assert!((r.events[0].confidence - 0.8).abs() < 1e-12);
        assert!((r.events[0].position_m - 1.51).abs() < 1e-12);
    }

    #[test]
    fn kinds_do_not_merge_and_empty_is_fine() {
        let ev = vec![
            Event::new(EventKind::PointFeature, 2.0, 0.01, 3e6, 0.9),
            Event::new(EventKind::BendTap, 2.0, 0.1, 0.01, 0.9),
            Event::new(EventKind::BendTap, 0.5, 0.1, 0.01, 0.9),
        ];
        let r = compile_report(ev, meta());
        assert_eq!(r.events.len(), 3);
        assert!(r.events.windows(2).all(|w| w[0].position_m <= w[1].position_m));
        let empty = compile_report(Vec::new(), meta());
        assert!(empty.events.is_empty());
        assert_eq!(empty.meta.channel_length_m, 3.0);
        let back: AnalysisReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
