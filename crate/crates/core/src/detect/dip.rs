//! Bend taps as localized drops of the peak Brillouin intensity.
//!
//! The statistic is the normalized ratio `trace / reference`, divided by a
//! robust quadratic trend and then by its running median, and filtered with a raised-cosine window as wide as the
//! bend extent prior. A filtered dip deeper than `threshold_sigma` robust
//! standard deviations of the unfiltered residual becomes an event.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::event::{margin_confidence, Event, EventKind};
use super::stats::{mad_sigma, running_median, runs};
use crate::error::{Error, Result};
use crate::fiber::{Channel, Feature};
use crate::forward::{synthesize_noiseless, NoiseModel, ScanConfig};
use crate::retrieval::{peak_bfs_trace, BfsTrace};

/// Maps a filtered dip depth back to a bend loss fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BendResponse {
    /// `depth = depth_per_loss * loss`.
    Linear { depth_per_loss: f64 },
    /// Monotone table from forward simulation, interpolated linearly.
    Table { loss: Vec<f64>, depth: Vec<f64> },
}

impl Default for BendResponse {
    fn default() -> Self {
        // slope of the forward model for a 10 cm bend at the default coupling factor
        BendResponse::Linear { depth_per_loss: 2.5 }
    }
}

pub const CALIBRATION_LOSSES: [f64; 6] = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2];

impl BendResponse {
    pub fn depth(&self, loss: f64) -> f64 {
        match self {
            BendResponse::Linear { depth_per_loss } => depth_per_loss * loss,
            BendResponse::Table { loss: l, depth: d } => interp(l, d, loss),
        }
    }

    pub fn invert(&self, depth: f64) -> f64 {
        match self {
            BendResponse::Linear { depth_per_loss } => depth / depth_per_loss,
            BendResponse::Table { loss: l, depth: d } => interp(d, l, depth),
        }
    }

    /// Tabulate the filtered dip depth of the forward model for a bend with
    /// the prior extent at `position_m` on `reference`, scanned with `cfg`.
    ///
    /// Only positions within reach of the detector windows are simulated.
    pub fn calibrate(reference: &Channel, cfg: &ScanConfig, position_m: f64, dip: &DipConfig) -> Result<Self> {
        let resolved = cfg.resolve(reference.length(), reference.min_linewidth())?;
        let reach = dip.baseline_window_factor * dip.extent_prior_m / 2.0 + 2.0 * dip.extent_prior_m;
        let keep: Vec<f64> = resolved
            .f_m
            .iter()
            .zip(&resolved.positions)
            .filter(|(_, z)| (**z - position_m).abs() <= reach)
            .map(|(f, _)| *f)
            .collect();
        if keep.len() < 3 {
            return Err(Error::Domain(format!("no scan positions near {position_m} m to calibrate against")));
        }
        let mut local = cfg.clone();
        local.positions_m = None;
        local.f_m_sweep_hz = Some(keep);
        local.z_offset_m = Some(resolved.z_offset);
        local.integration_step_m = Some(cfg.integration_step_m.unwrap_or(resolved.resolution / 4.0));
        local.noise = NoiseModel::off();
        let base = peak_bfs_trace(&synthesize_noiseless(reference, &local)?);
        let mut depth = Vec::with_capacity(CALIBRATION_LOSSES.len());
        for &loss in &CALIBRATION_LOSSES {
            let bent = reference.clone().with_feature(Feature::bend(position_m, loss, dip.extent_prior_m));
            let t = peak_bfs_trace(&synthesize_noiseless(&bent, &local)?);
            let stat = dip_statistic(&t, Some(&base), dip)?;
            depth.push(stat.depth.iter().copied().fold(0.0, f64::max));
        }
        // strong bends shift the local baseline and the depth saturates; keep
        // the monotone part
        let mut loss = vec![0.0];
        let mut table = vec![0.0];
        for (l, d) in CALIBRATION_LOSSES.iter().zip(depth) {
            if d <= *table.last().unwrap() {
                break;
            }
            loss.push(*l);
            table.push(d);
        }
        if loss.len() < 3 {
            return Err(Error::Domain("bend response is not monotone on this scan".into()));
        }
        let depth = table;
        Ok(BendResponse::Table { loss, depth })
    }
}

/// Piecewise-linear `y(x)` for increasing `xs`, extrapolated from the end pieces.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n == 1 {
        return ys[0];
    }
    let k = xs.partition_point(|v| *v < x).clamp(1, n - 1);
    let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipConfig {
    #[serde(default = "d_extent")]
    pub extent_prior_m: f64,
    #[serde(default = "d_threshold")]
    pub threshold_sigma: f64,
    /// Running-median window in units of the extent prior.
    #[serde(default = "d_window")]
    pub baseline_window_factor: f64,
    #[serde(default = "d_floor")]
    pub sigma_floor: f64,
    #[serde(default)]
    pub response: BendResponse,
}

fn d_extent() -> f64 {
    0.1
}
fn d_threshold() -> f64 {
    3.0
}
fn d_window() -> f64 {
    6.0
}
fn d_floor() -> f64 {
    1e-3
}

impl Default for DipConfig {
    fn default() -> Self {
        Self {
            extent_prior_m: d_extent(),
            threshold_sigma: d_threshold(),
            baseline_window_factor: d_window(),
            sigma_floor: d_floor(),
            response: BendResponse::default(),
        }
    }
}

/// Intermediate series of the dip detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DipStatistic {
    /// Ratio divided by its running median, minus one.
    pub residual: Vec<f64>,
    /// Matched-filtered depth, positive for dips; zero where the window does not fit.
    pub depth: Vec<f64>,
    /// Robust σ of the unfiltered residual.
    pub sigma: f64,
    pub threshold: f64,
}

fn raised_cosine(width_samples: usize) -> Vec<f64> {
    let m = width_samples.max(1);
    let w: Vec<f64> = (0..m)
        .map(|k| {
            let x = (k as f64 + 0.5) / m as f64;
            0.5 - 0.5 * (2.0 * std::f64::consts::PI * x).cos()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Quadratic least-squares trend with two rounds of 3σ outlier rejection,
/// so that the running median is not biased by curvature at the ends.
fn robust_quadratic(z: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 4 {
        return y.to_vec();
    }
    let (z0, span) = (z[0], (z[n - 1] - z[0]).max(1e-12));
    let u: Vec<f64> = z.iter().map(|v| 2.0 * (v - z0) / span - 1.0).collect();
    let mut keep = vec![true; n];
    let mut fit = vec![0.0; n];
    for _ in 0..3 {
        let rows: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
        let a = DMatrix::from_fn(rows.len(), 3, |r, c| u[rows[r]].powi(c as i32));
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i]));
        let Ok(coef) = a.svd(true, true).solve(&b, 1e-12) else { return y.to_vec() };
        for i in 0..n {
            fit[i] = coef[0] + coef[1] * u[i] + coef[2] * u[i] * u[i];
        }
        let r: Vec<f64> = (0..n).map(|i| y[i] - fit[i]).collect();
        let s = mad_sigma(&r);
        if !(s > 0.0) {
            break;
        }
        for i in 0..n {
            keep[i] = r[i].abs() <= 3.0 * s;
        }
        if keep.iter().filter(|k| **k).count() < 4 {
            break;
        }
    }
    fit
}

pub fn dip_statistic(trace: &BfsTrace, reference: Option<&BfsTrace>, cfg: &DipConfig) -> Result<DipStatistic> {
    if let Some(r) = reference {
        trace.check_same_grid(r)?;
    }
    if !(cfg.extent_prior_m > 0.0) {
        return Err(Error::Domain("extent prior must be > 0".into()));
    }
    let n = trace.len();
    let ratio: Vec<f64> = match reference {
        Some(r) => trace
            .peak_intensity
            .iter()
            .zip(&r.peak_intensity)
            .map(|(a, b)| if *b > 0.0 { a / b } else { 1.0 })
            .collect(),
        None => trace.peak_intensity.clone(),
    };
    let step = trace.position_step();
    let samples = |len: f64| if step > 0.0 { (len / step).round() as usize } else { 1 };
    let trend = robust_quadratic(&trace.positions, &ratio);
    let detrended: Vec<f64> = ratio.iter().zip(&trend).map(|(r, t)| if *t > 0.0 { r / t } else { 1.0 }).collect();
    let half = samples(cfg.baseline_window_factor * cfg.extent_prior_m) / 2;
    let baseline = running_median(&detrended, half.max(1));
    let residual: Vec<f64> =
        detrended.iter().zip(&baseline).map(|(r, b)| if *b > 0.0 { r / b - 1.0 } else { 0.0 }).collect();
    let sigma = mad_sigma(&residual).max(cfg.sigma_floor);
    let w = raised_cosine(samples(cfg.extent_prior_m) | 1);
    let h = w.len() / 2;
    let mut depth = vec![0.0; n];
    if n >= w.len() {
        for i in h..n - h {
            depth[i] = -w.iter().enumerate().map(|(k, wk)| wk * residual[i + k - h]).sum::<f64>();
        }
    }
    let threshold = cfg.threshold_sigma * sigma;
    Ok(DipStatistic { residual, depth, sigma, threshold })
}

/// Bend-tap events from the peak intensity of `trace`, normalized by
/// `reference` when given and by a running-median self-baseline otherwise.
pub fn detect_intensity_dip(trace: &BfsTrace, reference: Option<&BfsTrace>, cfg: &DipConfig) -> Result<Vec<Event>> {
    let stat = dip_statistic(trace, reference, cfg)?;
    let mask: Vec<bool> = stat.depth.iter().map(|d| *d > stat.threshold).collect();
    let mut events = Vec::new();
    for (a, b) in runs(&mask) {
        let i = (a..b).max_by(|&x, &y| stat.depth[x].total_cmp(&stat.depth[y])).unwrap();
        let d = stat.depth[i];
        let mut pos = trace.positions[i];
        if i > 0 && i + 1 < trace.len() {
            let (l, c, r) = (stat.depth[i - 1], d, stat.depth[i + 1]);
            let den = l - 2.0 * c + r;
            if den < 0.0 {
                pos += (0.5 * (l - r) / den).clamp(-0.5, 0.5) * trace.position_step();
            }
        }
        let loss = cfg.response.invert(d).max(0.0);
        events.push(Event::new(
            EventKind::BendTap,
            pos,
            cfg.extent_prior_m,
            loss,
            margin_confidence(d, stat.threshold),
        ));
    }
    Ok(events)
}
