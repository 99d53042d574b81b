//! Sonogram synthesis.
//!
//! For each modulation frequency the correlation point sits at `z_p`; every
//! fiber node at optical delay `u = s(z) - z_p` contributes its local gain
//! spectrum with excursion `A(u)`. The sum over nodes is a midpoint rule on a
//! uniform partition whose step is at most a quarter of the resolution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::kernel::arcsine_lorentzian;
use super::scan::{validate_scan, NoiseModel, ResolvedScan, ScanConfig};
use crate::error::{Error, Result};
use crate::fiber::{validate_channel, Channel};
use crate::sonogram::{Sonogram, SonogramMeta, SONOGRAM_FORMAT};

/// Quadrature nodes with their precomputed local parameters.
#[derive(Debug, Clone)]
pub struct Nodes {
    pub z: Vec<f64>,
    /// Apparent (reference-frame) coordinate of each node.
    pub s: Vec<f64>,
    /// `h · pump · probe · T(0,L) · T(0,z) · coupling`.
    pub weight: Vec<f64>,
    pub resonance: Vec<f64>,
    pub gamma: Vec<f64>,
    pub step: f64,
}

impl Nodes {
    pub fn build(channel: &Channel, cfg: &ScanConfig, r: &ResolvedScan) -> Result<Self> {
        let h = r.node_step();
        let t_total = channel.transmission_to(r.length);
        let scale = h * cfg.pump_power * cfg.probe_power * t_total;
        let mut n = Nodes {
            z: Vec::with_capacity(r.nodes),
            s: Vec::with_capacity(r.nodes),
            weight: Vec::with_capacity(r.nodes),
            resonance: Vec::with_capacity(r.nodes),
            gamma: Vec::with_capacity(r.nodes),
            step: h,
        };
        for z in r.node_positions() {
            let p = channel.local_profile(z)?;
            n.z.push(z);
            n.s.push(channel.apparent_coordinate(z, cfg.group_index));
            n.weight.push(scale * p.transmission_to_z * p.coupling);
            n.resonance.push(p.resonance());
            n.gamma.push(p.linewidth / 2.0);
        }
        Ok(n)
    }
}

#[derive(Serialize)]
struct ConfigPair<'a> {
    channel: &'a Channel,
    scan: &'a ScanConfig,
}

/// Digest covering both the channel and the scan configuration.
pub fn config_digest(channel: &Channel, cfg: &ScanConfig) -> String {
    crate::digest::of_json(&ConfigPair { channel, scan: cfg })
}

fn check_inputs(channel: &Channel, cfg: &ScanConfig) -> Result<()> {
    let v = validate_channel(channel);
    if !v.is_empty() {
        return Err(Error::InvalidChannel(v));
    }
    let v = validate_scan(cfg, channel);
    if !v.is_empty() {
        return Err(Error::InvalidScan(v));
    }
    Ok(())
}

/// Noiseless sonogram of `channel` under `cfg`.
pub fn synthesize_noiseless(channel: &Channel, cfg: &ScanConfig) -> Result<Sonogram> {
    check_inputs(channel, cfg)?;
    let r = cfg.resolve(channel.length(), channel.min_linewidth())?;
    let nodes = Nodes::build(channel, cfg, &r)?;
    let nd = r.detunings.len();
    let mut intensity = vec![0.0; r.positions.len() * nd];
    let k = std::f64::consts::TAU / r.v_ref;
    for (i, (&f_m, &zp)) in r.f_m.iter().zip(&r.positions).enumerate() {
        let row = &mut intensity[i * nd..(i + 1) * nd];
        let kf = k * f_m;
        for n in 0..nodes.z.len() {
            let w = nodes.weight[n];
            if w == 0.0 {
                continue;
            }
            let a = cfg.delta_f_hz * (kf * (nodes.s[n] - zp)).sin().abs();
            let (res, g) = (nodes.resonance[n], nodes.gamma[n]);
            for (out, &nu) in row.iter_mut().zip(&r.detunings) {
                *out += w * arcsine_lorentzian(a, nu - res, g);
            }
        }
    }
    let mut scan = cfg.clone();
    scan.noise.enabled = false;
    Ok(Sonogram {
        positions: r.positions.clone(),
        detunings: r.detunings.clone(),
        intensity,
        meta: SonogramMeta {
            format: SONOGRAM_FORMAT.into(),
            config_digest: config_digest(channel, &scan),
            scan,
            channel_digest: channel.digest(),
            channel_length_m: r.length,
            z_offset_m: r.z_offset,
            resolution_m: r.resolution,
            f_m_hz: r.f_m,
            noise_applied: false,
        },
    })
}

/// Apply the noise model to a noiseless sonogram.
///
/// Each position row draws from its own ChaCha stream selected by the row
/// index, two normals per pixel in detuning order, so the result depends on
/// `(seed, position index, detuning index)` only.
pub fn apply_noise(clean: &Sonogram, noise: &NoiseModel, seed: u64, channel: &Channel) -> Sonogram {
    let mut out = clean.clone();
    out.meta.scan.noise = *noise;
    out.meta.scan.seed = seed;
    out.meta.config_digest = config_digest(channel, &out.meta.scan);
    if !noise.enabled {
        return out;
    }
    let floor = noise.floor_fraction * clean.max_intensity();
    let nd = clean.detunings.len();
    for i in 0..clean.positions.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for x in &mut out.intensity[i * nd..(i + 1) * nd] {
            let g1: f64 = StandardNormal.sample(&mut rng);
            let g2: f64 = StandardNormal.sample(&mut rng);
            *x = (*x * (1.0 + noise.relative_sigma * g1) + floor * g2).max(0.0);
        }
    }
    out.meta.noise_applied = true;
    out
}

/// Sonogram of `channel` under `cfg`, including noise when enabled.
pub fn synthesize_sonogram(channel: &Channel, cfg: &ScanConfig) -> Result<Sonogram> {
    let clean = synthesize_noiseless(channel, cfg)?;
    Ok(apply_noise(&clean, &cfg.noise, cfg.seed, channel))
}
