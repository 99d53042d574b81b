//! Point features as short isolated excursions of the peak BFS.
//!
//! Each sample of the lightly smoothed trace is compared with the medians of
//! two flanks set one resolution cell away on either side. A sample that
//! clears both flanks in the same direction by more than `z_threshold` robust
//! standard deviations, over a half-height width below
//! `max_width_factor` resolution cells, marks a point feature.

use serde::{Deserialize, Serialize};

use super::event::{margin_confidence, Event, EventKind};
use super::stats::{diff_sigma, median, runs};
use crate::retrieval::BfsTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    #[serde(default = "d_z")]
    pub z_threshold: f64,
    #[serde(default = "d_floor")]
    pub sigma_floor_hz: f64,
    /// Flank length in resolution cells.
    #[serde(default = "d_flank")]
    pub flank_factor: f64,
    /// Gap between the sample and each flank in resolution cells.
    #[serde(default = "d_gap")]
    pub gap_factor: f64,
    #[serde(default = "d_width")]
    pub max_width_factor: f64,
    /// Gaussian smoothing σ in resolution cells; zero disables smoothing.
    #[serde(default = "d_smooth")]
    pub smoothing_factor: f64,
}

fn d_z() -> f64 {
    5.5
}
fn d_floor() -> f64 {
    0.2e6
}
fn d_flank() -> f64 {
    3.0
}
fn d_gap() -> f64 {
    1.0
}
fn d_width() -> f64 {
    2.0
}
fn d_smooth() -> f64 {
    1.0 / 3.0
}

impl Default for PointConfig {
    fn default() -> Self {
        Self {
            z_threshold: d_z(),
            sigma_floor_hz: d_floor(),
            flank_factor: d_flank(),
            gap_factor: d_gap(),
            max_width_factor: d_width(),
            smoothing_factor: d_smooth(),
        }
    }
}

fn gaussian_kernel(sigma_samples: f64) -> Vec<f64> {
    if !(sigma_samples > 0.0) {
        return vec![1.0];
    }
    let h = (3.0 * sigma_samples).ceil() as i64;
    let w: Vec<f64> = (-h..=h).map(|k| (-0.5 * (k as f64 / sigma_samples).powi(2)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Convolution with edge renormalization.
fn smooth(x: &[f64], w: &[f64]) -> Vec<f64> {
    let n = x.len() as i64;
    let h = (w.len() / 2) as i64;
    (0..n)
        .map(|i| {
            let (mut acc, mut norm) = (0.0, 0.0);
            for (k, wk) in w.iter().enumerate() {
                let j = i + k as i64 - h;
                if (0..n).contains(&j) {
                    acc += wk * x[j as usize];
                    norm += wk;
                }
            }
            acc / norm
        })
        .collect()
}

pub fn detect_point_feature(trace: &BfsTrace) -> Vec<Event> {
    detect_point_feature_with(trace, &PointConfig::default())
}

pub fn detect_point_feature_with(trace: &BfsTrace, cfg: &PointConfig) -> Vec<Event> {
    let (z, x) = (&trace.positions, &trace.peak_bfs);
    let n = x.len();
    let step = trace.position_step();
    if n < 5 || !(step > 0.0) {
        return Vec::new();
    }
    let res = trace.resolution_m.max(step);
    let cells = |f: f64| ((f * res) / step).round().max(1.0) as usize;
    let kernel = gaussian_kernel(cfg.smoothing_factor * res / step);
    let xs = smooth(x, &kernel);
    let knorm = kernel.iter().map(|v| v * v).sum::<f64>().sqrt();
    let sigma = (diff_sigma(x) * knorm).max(cfg.sigma_floor_hz);
    let (gap, flank) = (cells(cfg.gap_factor), cells(cfg.flank_factor));

    let mut e = vec![0.0; n];
    for i in 0..n {
        if i < gap + 1 || i + gap + 1 >= n {
            continue;
        }
        let left = &xs[i.saturating_sub(gap + flank)..i - gap];
        let right = &xs[i + gap + 1..(i + gap + 1 + flank).min(n)];
        if left.len() * 2 < flank || right.len() * 2 < flank {
            continue;
        }
        let (ml, mr) = (median(left), median(right));
        let up = (xs[i] - ml).min(xs[i] - mr);
        let down = (ml - xs[i]).min(mr - xs[i]);
        e[i] = if up > 0.0 && up >= down {
            up
        } else if down > 0.0 {
            -down
        } else {
            0.0
        };
    }

    let threshold = cfg.z_threshold * sigma;
    let mask: Vec<bool> = e.iter().map(|v| v.abs() > threshold).collect();
    let mut events = Vec::new();
    for (a, b) in runs(&mask) {
        let i = (a..b).max_by(|&p, &q| e[p].abs().total_cmp(&e[q].abs())).unwrap();
        let peak = e[i];
        let half = peak.abs() / 2.0;
        let same = |k: usize| e[k].signum() == peak.signum() && e[k].abs() >= half;
        let (mut lo, mut hi) = (i, i);
        while lo > 0 && same(lo - 1) {
            lo -= 1;
        }
        while hi + 1 < n && same(hi + 1) {
            hi += 1;
        }
        let width = (hi - lo + 1) as f64 * step;
        if width >= cfg.max_width_factor * res {
            continue;
        }
        let mut pos = z[i];
        if i > 0 && i + 1 < n {
            let (l, c, r) = (e[i - 1].abs(), peak.abs(), e[i + 1].abs());
            let den = l - 2.0 * c + r;
            if den < 0.0 {
                pos += (0.5 * (l - r) / den).clamp(-0.5, 0.5) * (z[i + 1] - z[i - 1]) / 2.0;
            }
        }
        events.push(Event::new(
            EventKind::PointFeature,
            pos,
            width,
            peak,
            margin_confidence(peak.abs() / sigma, cfg.z_threshold),
        ));
    }
    events
}
