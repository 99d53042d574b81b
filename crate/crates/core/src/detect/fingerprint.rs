//! Manufacturer lookup by mean Brillouin shift.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::event::Event;
use crate::error::{Error, Result};

pub const UNKNOWN_LABEL: &str = "unknown";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerprintEntry {
    pub mean_bfs_hz: f64,
    pub tolerance_hz: f64,
}

/// Validated label → fingerprint map. Construction fails if any two entries
/// could both claim one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FingerprintDb {
    entries: BTreeMap<String, FingerprintEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDb {
    entries: BTreeMap<String, FingerprintEntry>,
}

impl FingerprintDb {
    pub fn new(entries: BTreeMap<String, FingerprintEntry>) -> Result<Self> {
        for (label, e) in &entries {
            if !(e.tolerance_hz > 0.0 && e.tolerance_hz.is_finite()) {
                return Err(Error::AmbiguousDb(format!("{label}: tolerance must be > 0")));
            }
            if !e.mean_bfs_hz.is_finite() {
                return Err(Error::AmbiguousDb(format!("{label}: mean must be finite")));
            }
        }
        let list: Vec<_> = entries.iter().collect();
        for (i, (la, a)) in list.iter().enumerate() {
            for (lb, b) in &list[i + 1..] {
                if (a.mean_bfs_hz - b.mean_bfs_hz).abs() <= a.tolerance_hz + b.tolerance_hz {
                    return Err(Error::AmbiguousDb(format!("{la} and {lb} overlap within their tolerances")));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let raw: RawDb = toml::from_str(s).map_err(|e| Error::Parse(format!("fingerprint db: {e}")))?;
        Self::new(raw.entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("db serializes")
    }

    pub fn entries(&self) -> &BTreeMap<String, FingerprintEntry> {
        &self.entries
    }

    /// Nearest entry whose tolerance covers `mean_bfs_hz`, else [`UNKNOWN_LABEL`].
    pub fn classify(&self, mean_bfs_hz: f64) -> String {
        self.entries
            .iter()
            .filter(|(_, e)| (mean_bfs_hz - e.mean_bfs_hz).abs() <= e.tolerance_hz)
            .min_by(|a, b| (mean_bfs_hz - a.1.mean_bfs_hz).abs().total_cmp(&(mean_bfs_hz - b.1.mean_bfs_hz).abs()))
            .map_or_else(|| UNKNOWN_LABEL.to_string(), |(l, _)| l.clone())
    }

    /// Label for a foreign-segment event; events without a level are unknown.
    pub fn classify_event(&self, event: &Event) -> String {
        event.level_hz.map_or_else(|| UNKNOWN_LABEL.to_string(), |m| self.classify(m))
    }
}

pub fn classify_fingerprint(mean_bfs_hz: f64, db: &FingerprintDb) -> String {
    db.classify(mean_bfs_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db() -> FingerprintDb {
        let mut m = BTreeMap::new();
        m.insert("A".to_string(), FingerprintEntry { mean_bfs_hz: 10.850e9, tolerance_hz: 1.5e6 });
        m.insert("B".to_string(), FingerprintEntry { mean_bfs_hz: 10.854e9, tolerance_hz: 1.5e6 });
        FingerprintDb::new(m).unwrap()
    }

    #[test]
    fn lookup() {
        let db = db();
        assert_eq!(classify_fingerprint(10.8505e9, &db), "A");
        assert_eq!(classify_fingerprint(10.854e9, &db), "B");
        assert_eq!(classify_fingerprint(10.870e9, &db), UNKNOWN_LABEL);
    }

    #[test]
    fn overlap_is_rejected() {
        let mut m = db().entries().clone();
        m.insert("C".to_string(), FingerprintEntry { mean_bfs_hz: 10.852e9, tolerance_hz: 0.5e6 });
        assert!(matches!(FingerprintDb::new(m), Err(Error::AmbiguousDb(_))));
    }

    #[test]
    fn toml_round_trip() {
        let db = db();
        assert_eq!(FingerprintDb::from_toml_str(&db.to_toml_string()).unwrap(), db);
    }
}
