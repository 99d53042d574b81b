//! Foreign fiber segments as plateaus in the peak BFS trace.
//!
//! The trace is cut into piecewise-constant levels by circular binary
//! segmentation with a BIC-style penalty `2 σ² ln n` per change point. The channel level
//! is the densest window of width `min_step` over all samples; runs of levels
//! offset from it by at least `min_step` become events. Event boundaries are
//! refined to the half-height crossings of the trace.

use serde::{Deserialize, Serialize};

use super::event::{margin_confidence, Event, EventKind};
use super::stats::{diff_sigma, median};
use crate::error::{Error, Result};
use crate::retrieval::BfsTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    #[serde(default = "d_step")]
    pub min_step_hz: f64,
    #[serde(default = "d_extent")]
    pub min_extent_m: f64,
    /// Multiplier on the BIC penalty.
    #[serde(default = "d_one")]
    pub penalty_factor: f64,
    #[serde(default = "d_floor")]
    pub sigma_floor_hz: f64,
}

fn d_step() -> f64 {
    5e6
}
fn d_extent() -> f64 {
    0.05
}
fn d_one() -> f64 {
    1.0
}
fn d_floor() -> f64 {
    0.1e6
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self { min_step_hz: d_step(), min_extent_m: d_extent(), penalty_factor: 1.0, sigma_floor_hz: d_floor() }
    }
}

/// One constant piece of the trace, over samples `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub start: usize,
    pub end: usize,
    pub start_m: f64,
    pub end_m: f64,
    pub mean_hz: f64,
}

impl Level {
    pub fn extent_m(&self) -> f64 {
        self.end_m - self.start_m
    }
}

struct Prefix {
    offset: f64,
    s: Vec<f64>,
    s2: Vec<f64>,
}

impl Prefix {
    fn new(x: &[f64]) -> Self {
        // centred so the squared sums keep their precision at GHz levels
        let offset = x.first().copied().unwrap_or(0.0);
        let mut s = vec![0.0; x.len() + 1];
        let mut s2 = vec![0.0; x.len() + 1];
        for (i, v) in x.iter().enumerate() {
            let v = v - offset;
            s[i + 1] = s[i] + v;
            s2[i + 1] = s2[i] + v * v;
        }
        Self { offset, s, s2 }
    }

    fn sse(&self, a: usize, b: usize) -> f64 {
        let n = (b - a) as f64;
        let s = self.s[b] - self.s[a];
        (self.s2[b] - self.s2[a] - s * s / n).max(0.0)
    }

    /// Squared error of `[a, b)` without `[i, j)` about its own mean.
    fn sse_outside(&self, a: usize, i: usize, j: usize, b: usize) -> f64 {
        let n = (b - a - (j - i)) as f64;
        let s = self.s[b] - self.s[j] + self.s[i] - self.s[a];
        let s2 = self.s2[b] - self.s2[j] + self.s2[i] - self.s2[a];
        (s2 - s * s / n).max(0.0)
    }

    fn mean(&self, a: usize, b: usize) -> f64 {
        self.offset + (self.s[b] - self.s[a]) / (b - a) as f64
    }
}

/// Best single cut and best inner segment `[i, j)` of `[a, b)`, chosen by
/// reduction in squared error; the inner segment must pay for two cuts.
fn split(p: &Prefix, a: usize, b: usize, penalty: f64, out: &mut Vec<usize>) {
    if b - a < 2 {
        return;
    }
    let total = p.sse(a, b);
    let mut one = (0.0, a);
    for k in a + 1..b {
        let gain = total - p.sse(a, k) - p.sse(k, b);
        if gain > one.0 {
            one = (gain, k);
        }
    }
    let mut two = (0.0, a, a);
    for i in a + 1..b - 1 {
        for j in i + 1..b {
            let gain = total - p.sse(i, j) - p.sse_outside(a, i, j, b);
            if gain > two.0 {
                two = (gain, i, j);
            }
        }
    }
    if two.0 > 2.0 * penalty && two.0 - one.0 > penalty {
        let (_, i, j) = two;
        split(p, a, i, penalty, out);
        out.push(i);
        split(p, i, j, penalty, out);
        out.push(j);
        split(p, j, b, penalty, out);
    } else if one.0 > penalty {
        split(p, a, one.1, penalty, out);
        out.push(one.1);
        split(p, one.1, b, penalty, out);
    }
}

/// Piecewise-constant levels of the trace.
pub fn segment_levels(trace: &BfsTrace, cfg: &SegmentConfig) -> Vec<Level> {
    levels_of(&trace.positions, &trace.peak_bfs, cfg)
}

fn levels_of(z: &[f64], x: &[f64], cfg: &SegmentConfig) -> Vec<Level> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let sigma = diff_sigma(x).max(cfg.sigma_floor_hz);
    let penalty = cfg.penalty_factor * 2.0 * sigma * sigma * (n as f64).ln().max(1.0);
    let p = Prefix::new(x);
    let mut cuts = vec![0];
    split(&p, 0, n, penalty, &mut cuts);
    cuts.push(n);
    let edge = |i: usize| {
        if i == 0 {
            z[0]
        } else if i == n {
            z[n - 1]
        } else {
            0.5 * (z[i - 1] + z[i])
        }
    };
    cuts.windows(2)
        .map(|w| Level { start: w[0], end: w[1], start_m: edge(w[0]), end_m: edge(w[1]), mean_hz: p.mean(w[0], w[1]) })
        .collect()
}

/// Centre of the densest window of width `width` over the values.
fn dominant_level(x: &[f64], width: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let (mut best, mut best_n, mut hi) = ((0, 0), 0, 0);
    for lo in 0..s.len() {
        while hi < s.len() && s[hi] - s[lo] <= width {
            hi += 1;
        }
        if hi - lo > best_n {
            best_n = hi - lo;
            best = (lo, hi);
        }
    }
    median(&s[best.0..best.1])
}

/// Foreign-segment events with the default penalty.
pub fn segment_bfs(trace: &BfsTrace, min_step_hz: f64, min_extent_m: f64) -> Result<Vec<Event>> {
    segment_bfs_with(trace, &SegmentConfig { min_step_hz, min_extent_m, ..SegmentConfig::default() })
}

pub fn segment_bfs_with(trace: &BfsTrace, cfg: &SegmentConfig) -> Result<Vec<Event>> {
    if !(cfg.min_step_hz > 0.0) {
        return Err(Error::Domain(format!("min_step must be > 0, got {}", cfg.min_step_hz)));
    }
    let (z, x) = (&trace.positions, &trace.peak_bfs);
    let levels = levels_of(z, x, cfg);
    if levels.is_empty() {
        return Ok(Vec::new());
    }
    let reference = dominant_level(x, cfg.min_step_hz);
    let sigma = diff_sigma(x).max(cfg.sigma_floor_hz);
    let offset = |l: &Level| l.mean_hz - reference;
    let mut events = Vec::new();
    let mut i = 0;
    while i < levels.len() {
        let o = offset(&levels[i]);
        if o.abs() < cfg.min_step_hz {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < levels.len()
            && offset(&levels[j]).abs() >= cfg.min_step_hz
            && offset(&levels[j]).signum() == o.signum()
        {
            j += 1;
        }
        let (a, b) = (levels[i].start, levels[j - 1].end);
        let level = median(&x[a..b]);
        let mid = 0.5 * (level + reference);
        let sign = (level - reference).signum();
        let inside = |k: usize| sign * (x[k] - mid) > 0.0;
        let reach =
            ((trace.resolution_m.max(trace.position_step()) * 2.0) / trace.position_step().max(1e-12)).ceil() as usize;
        let start = refine_edge(z, x, a, reach, mid, &inside, true);
        let end = refine_edge(z, x, b, reach, mid, &inside, false);
        let extent = end - start;
        if extent >= cfg.min_extent_m {
            // standard error of the level against the per-sample scatter
            let n_in = (b - a) as f64;
            let stat = (level - reference).abs() / (sigma / n_in.sqrt());
            let mut e = Event::new(
                EventKind::ForeignSegment,
                0.5 * (start + end),
                extent,
                level - reference,
                margin_confidence(stat, 3.0),
            );
            e.level_hz = Some(level);
            events.push(e);
        }
        i = j;
    }
    Ok(events)
}

/// Half-height crossing nearest to the level boundary at sample `b`.
///
/// On the `entering` edge the crossing lies between the last outside
/// sample and the first inside sample; for a falling edge the roles swap.
fn refine_edge(
    z: &[f64],
    x: &[f64],
    b: usize,
    reach: usize,
    mid: f64,
    inside: &dyn Fn(usize) -> bool,
    entering: bool,
) -> f64 {
    let n = x.len();
    let default = if b == 0 {
        z[0]
    } else if b >= n {
        z[n - 1]
    } else {
        0.5 * (z[b - 1] + z[b])
    };
    let lo = b.saturating_sub(reach).max(1);
    let hi = (b + reach).min(n - 1);
    let mut best: Option<(f64, f64)> = None;
    for k in lo..=hi {
        let crossing = if entering { !inside(k - 1) && inside(k) } else { inside(k - 1) && !inside(k) };
        if !crossing {
            continue;
        }
        let t = (mid - x[k - 1]) / (x[k] - x[k - 1]);
        let pos = z[k - 1] + t.clamp(0.0, 1.0) * (z[k] - z[k - 1]);
        let d = (pos - default).abs();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((pos, d));
        }
    }
    best.map_or(default, |(pos, _)| pos)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(x: Vec<f64>) -> BfsTrace {
        let n = x.len();
        BfsTrace {
            positions: (0..n).map(|i| i as f64 * 0.005).collect(),
            peak_bfs: x,
            peak_intensity: vec![1.0; n],
            excluded: Vec::new(),
            resolution_m: 0.027,
            config_digest: String::new(),
        }
    }

    #[test]
    fn constant_trace_has_no_events() {
        let t = trace(vec![10.8e9; 300]);
        assert!(segment_bfs(&t, 5e6, 0.03).unwrap().is_empty());
        assert_eq!(segment_levels(&t, &SegmentConfig::default()).len(), 1);
    }

    #[test]
    fn step_block_is_found() {
        let x: Vec<f64> = (0..400).map(|i| if (100..220).contains(&i) { 10.95e9 } else { 10.8e9 }).collect();
        let ev = segment_bfs(&trace(x), 5e6, 0.03).unwrap();
        assert_eq!(ev.len(), 1);
        assert!((ev[0].magnitude - 150e6).abs() < 1.0);
        assert!((ev[0].start_m() - 0.4975).abs() < 0.003, "{}", ev[0].start_m());
        assert!((ev[0].end_m() - 1.0975).abs() < 0.003, "{}", ev[0].end_m());
    }

    #[test]
    fn rejects_bad_step() {
        assert!(segment_bfs(&trace(vec![1.0; 10]), 0.0, 0.01).is_err());
    }
}
