//! Rayleigh OTDR baseline.
//!
//! The backscattered power at range `z` is `T(z)² β(z)`, with `T` the one-way
//! transmission of the channel and `β` the per-segment backscatter level. It
//! is averaged over the pulse's spatial extent `v_g τ / 2`, converted to dB
//! and perturbed by white Gaussian noise per sample. Past the channel end the
//! power drops to a fixed floor, which is what a broken or open fiber shows.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::detect::stats::{diff_sigma, runs};
use crate::detect::{Event, EventKind};
use crate::digest::sub_seed;
use crate::error::{Error, Result};
use crate::fiber::{Channel, C_VACUUM};

/// Power level past the fiber end, dB relative to the backscatter at z = 0.
pub const END_FLOOR_DB: f64 = -60.0;
/// Sub-samples per pulse extent when averaging the power profile.
const PULSE_SUBSAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OtdrConfig {
    #[serde(default = "d_pulse")]
    pub pulse_width_s: f64,
    #[serde(default = "d_sampling")]
    pub sampling_m: f64,
    #[serde(default = "d_sigma")]
    pub noise_sigma_db: f64,
    #[serde(default = "d_n")]
    pub n_traces: usize,
    #[serde(default = "d_threshold")]
    pub threshold_db: f64,
    /// Measured range; defaults to the channel length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_m: Option<f64>,
}

fn d_pulse() -> f64 {
    2e-9
}
fn d_sampling() -> f64 {
    0.025
}
fn d_sigma() -> f64 {
    0.05
}
fn d_n() -> usize {
    10
}
fn d_threshold() -> f64 {
    0.15
}

impl Default for OtdrConfig {
    fn default() -> Self {
        Self {
            pulse_width_s: d_pulse(),
            sampling_m: d_sampling(),
            noise_sigma_db: d_sigma(),
            n_traces: d_n(),
            threshold_db: d_threshold(),
            range_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtdrTrace {
    pub positions: Vec<f64>,
    pub power_db: Vec<f64>,
    pub pulse_width_s: f64,
    pub n_averages: usize,
    pub config_digest: String,
}

impl OtdrTrace {
    pub fn to_text(&self) -> String {
        let mut out = String::from("# bocda-otdr/1\n");
        out.push_str(&format!("# pulse_width_s: {}\n", self.pulse_width_s));
        out.push_str(&format!("# n_averages: {}\n", self.n_averages));
        out.push_str(&format!("# config_digest: {}\n", self.config_digest));
        out.push_str("position_m,power_db\n");
        for (z, p) in self.positions.iter().zip(&self.power_db) {
            out.push_str(&format!("{z},{p}\n"));
        }
        out
    }

    pub fn sampling(&self) -> f64 {
        match self.positions.len() {
            0 | 1 => 0.0,
            n => (self.positions[n - 1] - self.positions[0]) / (n - 1) as f64,
        }
    }
}

/// Length-weighted mean group velocity of the channel.
pub fn group_velocity(channel: &Channel) -> f64 {
    let l = channel.length();
    let ng: f64 = channel.segments.iter().map(|s| s.n_g * s.length_m).sum::<f64>() / l;
    C_VACUUM / ng
}

/// Spatial extent `v_g τ / 2` of a pulse of width `tau`.
pub fn pulse_extent(channel: &Channel, tau: f64) -> f64 {
    group_velocity(channel) * tau / 2.0
}

/// Noiseless two-way power profile in linear units, before pulse averaging.
fn raw_power(channel: &Channel, z: f64) -> f64 {
    let l = channel.length();
    if z > l {
        return 10f64.powf(END_FLOOR_DB / 10.0);
    }
    let z = z.max(0.0);
    let seg = &channel.segments[channel.segment_index(z)];
    let t = channel.transmission_to(z);
    t * t * 10f64.powf(seg.backscatter_offset_db / 10.0)
}

/// Noiseless trace in dB on the sampling grid.
pub fn otdr_profile(channel: &Channel, pulse_width_s: f64, sampling_m: f64, range_m: f64) -> Result<OtdrTrace> {
    if !(pulse_width_s > 0.0) || !(sampling_m > 0.0) || !(range_m > 0.0) {
        return Err(Error::Domain("pulse width, sampling and range must be > 0".into()));
    }
    let w = pulse_extent(channel, pulse_width_s);
    let n = (range_m / sampling_m + 1e-9).floor() as usize + 1;
    let mut positions = Vec::with_capacity(n);
    let mut power_db = Vec::with_capacity(n);
    for k in 0..n {
        let z = k as f64 * sampling_m;
        let (a, b) = ((z - w / 2.0).max(0.0), (z + w / 2.0).min(range_m));
        let m = PULSE_SUBSAMPLES;
        let h = (b - a) / m as f64;
        let p = if h > 0.0 {
            (0..m).map(|j| raw_power(channel, a + (j as f64 + 0.5) * h)).sum::<f64>() / m as f64
        } else {
            raw_power(channel, z)
        };
        positions.push(z);
        power_db.push(10.0 * p.log10());
    }
    let config_digest = crate::digest::of_json(&(channel.digest(), pulse_width_s, sampling_m, range_m));
    Ok(OtdrTrace { positions, power_db, pulse_width_s, n_averages: 1, config_digest })
}

/// `n` noisy traces; trace `k` draws from the sub-seed named `otdr-trace-k`.
pub fn simulate_otdr_trace(
    channel: &Channel,
    pulse_width_s: f64,
    sampling_m: f64,
    noise_sigma_db: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<OtdrTrace>> {
    simulate_otdr_range(channel, pulse_width_s, sampling_m, noise_sigma_db, n, seed, channel.length())
}

pub fn simulate_otdr_range(
    channel: &Channel,
    pulse_width_s: f64,
    sampling_m: f64,
    noise_sigma_db: f64,
    n: usize,
    seed: u64,
    range_m: f64,
) -> Result<Vec<OtdrTrace>> {
    if !(noise_sigma_db >= 0.0) {
        return Err(Error::Domain("noise sigma must be >= 0".into()));
    }
    let mut clean = otdr_profile(channel, pulse_width_s, sampling_m, range_m)?;
    clean.config_digest = crate::digest::of_json(&(&clean.config_digest, noise_sigma_db, n, seed));
    let normal = Normal::new(0.0, noise_sigma_db).map_err(|e| Error::Domain(e.to_string()))?;
    Ok((0..n)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &format!("otdr-trace-{k}")));
            let mut t = clean.clone();
            for p in &mut t.power_db {
                *p += normal.sample(&mut rng);
            }
            t
        })
        .collect())
}

pub fn simulate_with(channel: &Channel, cfg: &OtdrConfig, seed: u64) -> Result<Vec<OtdrTrace>> {
    simulate_otdr_range(
        channel,
        cfg.pulse_width_s,
        cfg.sampling_m,
        cfg.noise_sigma_db,
        cfg.n_traces,
        seed,
        cfg.range_m.unwrap_or_else(|| channel.length()),
    )
}

/// Sample-wise mean in dB.
pub fn mean_trace(traces: &[OtdrTrace]) -> Result<OtdrTrace> {
    let first = traces.first().ok_or_else(|| Error::Domain("no OTDR traces".into()))?;
    if traces.iter().any(|t| t.positions != first.positions) {
        return Err(Error::GridMismatch("OTDR traces differ in sampling".into()));
    }
    let n = traces.len() as f64;
    let power_db = (0..first.positions.len()).map(|i| traces.iter().map(|t| t.power_db[i]).sum::<f64>() / n).collect();
    Ok(OtdrTrace {
        positions: first.positions.clone(),
        power_db,
        pulse_width_s: first.pulse_width_s,
        n_averages: traces.iter().map(|t| t.n_averages).sum(),
        config_digest: first.config_digest.clone(),
    })
}

fn window_mean(x: &[f64], a: usize, b: usize) -> f64 {
    x[a..b].iter().sum::<f64>() / (b - a) as f64
}

/// Steps and localized dips in the averaged trace.
///
/// Two windows of one pulse extent, separated by a gap of one pulse extent,
/// give the step `right − left` at each sample; the same flanks against a
/// centre window give the dip. A run of samples where either exceeds
/// `max(threshold_db, 3 σ)` yields one `OtdrStep` event at its extremum, `σ`
/// being the statistic's own noise estimated from the trace.
#[allow(clippy::needless_range_loop)]
pub fn otdr_detect(traces: &[OtdrTrace], threshold_db: f64) -> Result<Vec<Event>> {
    let mean = mean_trace(traces)?;
    let x = &mean.power_db;
    let n = x.len();
    let dz = mean.sampling();
    if n < 8 || !(dz > 0.0) {
        return Ok(Vec::new());
    }
    let extent = C_VACUUM / crate::fiber::DEFAULT_GROUP_INDEX * mean.pulse_width_s / 2.0;
    let w = ((extent / dz).round() as usize).max(2);
    let g = (w / 2).max(1);
    let sigma = diff_sigma(x);
    let sigma_step = sigma * (2.0 / w as f64).sqrt();
    let thr = threshold_db.max(3.0 * sigma_step);
    let mut stat = vec![0.0; n];
    for i in g + w..n.saturating_sub(g + w) {
        let left = window_mean(x, i - g - w, i - g);
        let right = window_mean(x, i + g + 1, i + g + 1 + w);
        let centre = window_mean(x, i - g / 2, i + g / 2 + 1);
        let step = right - left;
        let dip = centre - 0.5 * (left + right);
        stat[i] = if step.abs() >= dip.abs() { step } else { dip };
    }
    let mask: Vec<bool> = stat.iter().map(|s| s.abs() > thr).collect();
    Ok(runs(&mask)
        .into_iter()
        .map(|(a, b)| {
            let i = (a..b).max_by(|&p, &q| stat[p].abs().total_cmp(&stat[q].abs())).unwrap();
            let conf = (1.0 - (thr / stat[i].abs()).powi(2)).clamp(0.0, 1.0);
            Event::new(EventKind::OtdrStep, mean.positions[i], extent, stat[i], conf)
        })
        .collect())
}
