//! Event detection on peak traces.
//!
//! * [`detect_intensity_dip`]: bend taps as localized drops of peak intensity.
//! * [`segment_bfs`]: foreign fiber segments as plateaus of peak BFS.
//! * [`detect_point_feature`]: connectors and couplers as short BFS excursions.
//! * [`classify_fingerprint`]: manufacturer lookup from a segment's mean BFS.
//! * [`compile_report`]: merge, sort and annotate the events of one analysis.

mod dip;
mod event;
mod fingerprint;
mod point;
mod report;
mod segment;
pub(crate) mod stats;

pub use dip::{detect_intensity_dip, dip_statistic, BendResponse, DipConfig, DipStatistic};
pub use event::{Event, EventKind};
pub use fingerprint::{classify_fingerprint, FingerprintDb, FingerprintEntry, UNKNOWN_LABEL};
pub use point::{detect_point_feature, detect_point_feature_with, PointConfig};
pub use report::{compile_report, AnalysisReport, ReportMeta};
pub use segment::{segment_bfs, segment_bfs_with, segment_levels, Level, SegmentConfig};
