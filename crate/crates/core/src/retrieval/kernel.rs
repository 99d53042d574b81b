//! Background kernel mapping local resonance strengths to sonogram pixels.
//!
//! The unknowns are resonance strengths `c(cell, k)`: the amount of
//! Lorentzian resonance centred on detuning bin `ν_k` carried by the fiber
//! cell around a measurement position. Cells are the Voronoi intervals of the
//! position grid, and each cell owns the forward quadrature nodes inside it,
//! so a channel that is constant per cell with resonances on the detuning
//! grid is represented exactly. The local gain spectrum is `g = Φ c` with
//! `Φ` the unit-peak Lorentzian of the configured linewidth.
//!
//! Because every entry depends on detuning only through `ν_j - ν_k`, each
//! (position, cell) block is Toeplitz:
//!
//! ```text
//! K[(p,j),(c,k)] = t_pc(j - k),   t_pc(m) = Σ_{n ∈ c} h · S(A(p, z_n), m·Δν)
//! ```
//!
//! Blocks are stored as their taps plus the half spectrum of the circulant
//! embedding, so products with `K` and `Kᵀ` cost one FFT per row or column
//! block and a frequency-domain multiply-accumulate.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fiber::{Channel, DEFAULT_LINEWIDTH_HZ};
use crate::forward::{arcsine_lorentzian, lorentzian, ScanConfig};

pub const DEFAULT_MEMORY_BUDGET: usize = 512 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Linewidth (FWHM) of the resonances the kernel is built for, Hz.
    pub linewidth_hz: f64,
    pub memory_budget_bytes: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { linewidth_hz: DEFAULT_LINEWIDTH_HZ, memory_budget_bytes: DEFAULT_MEMORY_BUDGET }
    }
}

impl KernelOptions {
    pub fn for_channel(channel: &Channel) -> Self {
        Self { linewidth_hz: channel.min_linewidth(), ..Self::default() }
    }
}

pub struct BackgroundKernel {
    pub positions: Vec<f64>,
    pub detunings: Vec<f64>,
    /// `[lo, hi)` bounds of each cell, one per position.
    pub cells: Vec<(f64, f64)>,
    pub gamma: f64,
    np: usize,
    nc: usize,
    nv: usize,
    nfft: usize,
    half: usize,
    /// `[p][c][m + nv - 1]`.
    taps: Vec<f64>,
    /// `[p][c][f]`, `f < nfft/2 + 1`.
    spectra: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for BackgroundKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BackgroundKernel")
            .field("positions", &self.np)
            .field("cells", &self.nc)
            .field("detunings", &self.nv)
            .field("nfft", &self.nfft)
            .finish()
    }
}

/// Bytes needed for a kernel of the given grid.
pub fn kernel_bytes(n_positions: usize, n_detunings: usize) -> usize {
    let nfft = (2 * n_detunings).saturating_sub(1).max(1).next_power_of_two();
    let blocks = n_positions.saturating_mul(n_positions);
    blocks.saturating_mul((2 * n_detunings).saturating_sub(1) * 8 + (nfft / 2 + 1) * 16)
}

/// Voronoi cells of sorted `positions` clipped to `[0, length]`.
fn voronoi(positions: &[f64], length: f64) -> Vec<(f64, f64)> {
    let n = positions.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { 0.0 } else { 0.5 * (positions[i - 1] + positions[i]) };
            let hi = if i + 1 == n { length } else { 0.5 * (positions[i] + positions[i + 1]) };
            (lo, hi)
        })
        .collect()
}

/// Build the kernel for a channel of `channel_length` scanned with `cfg`.
///
/// The reference frame of `cfg` is taken as the fiber frame, i.e. all
/// segments are assumed to share `cfg.group_index`.
pub fn background_kernel(channel_length: f64, cfg: &ScanConfig, opts: &KernelOptions) -> Result<BackgroundKernel> {
    let r = cfg.resolve(channel_length, opts.linewidth_hz)?;
    let np = r.positions.len();
    let nv = r.detunings.len();
    if np == 0 || nv == 0 {
        return Err(Error::GridMismatch("empty position or detuning grid".into()));
    }
    if r.positions.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::GridMismatch("kernel needs strictly increasing positions".into()));
    }
    let need = kernel_bytes(np, nv);
    if need > opts.memory_budget_bytes {
        return Err(Error::GridTooLarge { required: need, budget: opts.memory_budget_bytes });
    }
    let nc = np;
    let cells = voronoi(&r.positions, channel_length);
    let step = if nv > 1 { cfg.probe_sweep_hz.step } else { 1.0 };
    let gamma = opts.linewidth_hz / 2.0;
    let h = r.node_step();
    let nodes = r.node_positions();
    let weight = h * cfg.pump_power * cfg.probe_power;

    // owning cell of each node
    let mut owner = Vec::with_capacity(nodes.len());
    let mut c = 0;
    for &z in &nodes {
        while c + 1 < nc && z >= cells[c].1 {
            c += 1;
        }
        owner.push(c);
    }

    let nt = 2 * nv - 1;
    let nfft = nt.next_power_of_two();
    let half = nfft / 2 + 1;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(nfft);
    let inv = planner.plan_fft_inverse(nfft);

    let mut taps = vec![0.0; np * nc * nt];
    let k = std::f64::consts::TAU / r.v_ref;
    for p in 0..np {
        let kf = k * r.f_m[p];
        let zp = r.positions[p];
        for (n, &z) in nodes.iter().enumerate() {
            let a = cfg.delta_f_hz * (kf * (z - zp)).sin().abs();
            let base = (p * nc + owner[n]) * nt;
            for m in 0..nt {
                let x = (m as f64 - (nv as f64 - 1.0)) * step;
                taps[base + m] += weight * arcsine_lorentzian(a, x, gamma);
            }
        }
    }

    let mut spectra = vec![Complex64::new(0.0, 0.0); np * nc * half];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for b in 0..np * nc {
        let t = &taps[b * nt..(b + 1) * nt];
        buf.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for m in 0..nv {
            buf[m].re = t[m + nv - 1];
        }
        for m in 1..nv {
            buf[nfft - m].re = t[nv - 1 - m];
        }
        fwd.process(&mut buf);
        spectra[b * half..(b + 1) * half].copy_from_slice(&buf[..half]);
    }

    Ok(BackgroundKernel {
        positions: r.positions,
        detunings: r.detunings,
        cells,
        gamma,
        np,
        nc,
        nv,
        nfft,
        half,
        taps,
        spectra,
        fwd,
        inv,
    })
}

impl BackgroundKernel {
    pub fn n_rows(&self) -> usize {
        self.np * self.nv
    }

    pub fn n_cols(&self) -> usize {
        self.nc * self.nv
    }

    pub fn n_detunings(&self) -> usize {
        self.nv
    }

    pub fn n_cells(&self) -> usize {
        self.nc
    }

    /// Toeplitz tap `t_pc(m)` for `m` in `-(nv-1)..=(nv-1)`.
    #[inline]
    pub fn tap(&self, p: usize, c: usize, m: isize) -> f64 {
        let nt = 2 * self.nv - 1;
        self.taps[(p * self.nc + c) * nt + (m + self.nv as isize - 1) as usize]
    }

    /// Single matrix entry.
    pub fn entry(&self, p: usize, j: usize, c: usize, k: usize) -> f64 {
        self.tap(p, c, j as isize - k as isize)
    }

    /// Dense column `(c, k)` over all rows.
    pub fn column(&self, c: usize, k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_rows());
        for p in 0..self.np {
            for j in 0..self.nv {
                out.push(self.entry(p, j, c, k));
            }
        }
        out
    }

    /// Inner product of columns `(c1, k1)` and `(c2, k2)`.
    pub fn column_dot(&self, c1: usize, k1: usize, c2: usize, k2: usize) -> f64 {
        let nt = 2 * self.nv - 1;
        let nv = self.nv as isize;
        let mut acc = 0.0;
        // j ranges over 0..nv, offsets j-k1 and j-k2
        for p in 0..self.np {
            let t1 = &self.taps[(p * self.nc + c1) * nt..(p * self.nc + c1 + 1) * nt];
            let t2 = &self.taps[(p * self.nc + c2) * nt..(p * self.nc + c2 + 1) * nt];
            let o1 = nv - 1 - k1 as isize;
            let o2 = nv - 1 - k2 as isize;
            for j in 0..nv {
                acc += t1[(j + o1) as usize] * t2[(j + o2) as usize];
            }
        }
        acc
    }

    /// `Σ_ij K_ij²`.
    pub fn frobenius_sq(&self) -> f64 {
        let nt = 2 * self.nv - 1;
        let mut acc = 0.0;
        for b in 0..self.np * self.nc {
            for m in 0..nt {
                let mult = self.nv - (m as isize - (self.nv as isize - 1)).unsigned_abs();
                let t = self.taps[b * nt + m];
                acc += t * t * mult as f64;
            }
        }
        acc
    }

    fn spectrum_of(&self, x: &[f64], buf: &mut [Complex64]) {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.fwd.process(buf);
    }

    fn inverse_into(&self, acc: &[Complex64], buf: &mut [Complex64], out: &mut [f64]) {
        let n = self.nfft;
        buf[..self.half].copy_from_slice(acc);
        for f in self.half..n {
            buf[f] = acc[n - f].conj();
        }
        self.inv.process(buf);
        let scale = 1.0 / n as f64;
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o = b.re * scale;
        }
    }

    /// `K x` with `x` laid out `[cell][detuning]`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.nfft];
        let mut xs = vec![Complex64::new(0.0, 0.0); self.nc * self.half];
        let mut active = vec![false; self.nc];
        for c in 0..self.nc {
            let xc = &x[c * self.nv..(c + 1) * self.nv];
            if xc.iter().all(|v| *v == 0.0) {
                continue;
            }
            active[c] = true;
            self.spectrum_of(xc, &mut buf);
            xs[c * self.half..(c + 1) * self.half].copy_from_slice(&buf[..self.half]);
        }
        let mut y = vec![0.0; self.n_rows()];
        let mut acc = vec![Complex64::new(0.0, 0.0); self.half];
        for p in 0..self.np {
            acc.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for c in 0..self.nc {
                if !active[c] {
                    continue;
                }
                let t = &self.spectra[(p * self.nc + c) * self.half..(p * self.nc + c + 1) * self.half];
                let xc = &xs[c * self.half..(c + 1) * self.half];
                for f in 0..self.half {
                    acc[f] += t[f] * xc[f];
                }
            }
            self.inverse_into(&acc, &mut buf, &mut y[p * self.nv..(p + 1) * self.nv]);
        }
        y
    }

    /// `Kᵀ y` with `y` laid out `[position][detuning]`.
    pub fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n_rows());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.nfft];
        let mut ys = vec![Complex64::new(0.0, 0.0); self.np * self.half];
        for p in 0..self.np {
            self.spectrum_of(&y[p * self.nv..(p + 1) * self.nv], &mut buf);
            ys[p * self.half..(p + 1) * self.half].copy_from_slice(&buf[..self.half]);
        }
        let mut x = vec![0.0; self.n_cols()];
        let mut acc = vec![Complex64::new(0.0, 0.0); self.half];
        for c in 0..self.nc {
            acc.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for p in 0..self.np {
                let t = &self.spectra[(p * self.nc + c) * self.half..(p * self.nc + c + 1) * self.half];
                let yp = &ys[p * self.half..(p + 1) * self.half];
                for f in 0..self.half {
                    acc[f] += t[f].conj() * yp[f];
                }
            }
            self.inverse_into(&acc, &mut buf, &mut x[c * self.nv..(c + 1) * self.nv]);
        }
        x
    }

    /// Unit-peak Lorentzian matrix `Φ[j][k] = L(ν_j - ν_k)`.
    pub fn phi(&self) -> Vec<f64> {
        let nv = self.nv;
        let mut m = vec![0.0; nv * nv];
        for j in 0..nv {
            for k in 0..nv {
                m[j * nv + k] = lorentzian(self.detunings[j] - self.detunings[k], self.gamma);
            }
        }
        m
    }

    /// Gain `Φ c` per cell.
    pub fn gain_of(&self, c: &[f64]) -> Vec<f64> {
        let nv = self.nv;
        let phi = self.phi();
        let mut g = vec![0.0; c.len()];
        for cell in 0..self.nc {
            let cc = &c[cell * nv..(cell + 1) * nv];
            for j in 0..nv {
                let row = &phi[j * nv..(j + 1) * nv];
                g[cell * nv + j] = row.iter().zip(cc).map(|(a, b)| a * b).sum::<f64>().max(0.0);
            }
        }
        g
    }
}

/// Cell-averaged resonance strengths of `channel`, each node assigned to the
/// detuning bin nearest its resonance.
///
/// Exact when every resonance lies on the detuning grid; otherwise the
/// nearest-bin assignment is an approximation.
pub fn ground_truth_strength(channel: &Channel, cfg: &ScanConfig, kernel: &BackgroundKernel) -> Result<Vec<f64>> {
    let r = cfg.resolve(channel.length(), channel.min_linewidth())?;
    let nodes = r.node_positions();
    let nv = kernel.nv;
    let mut c = vec![0.0; kernel.n_cols()];
    let mut count = vec![0usize; kernel.nc];
    let t_total = channel.transmission_to(r.length);
    let d0 = kernel.detunings[0];
    let step = if nv > 1 { kernel.detunings[1] - d0 } else { 1.0 };
    let mut cell = 0;
    for &z in &nodes {
        while cell + 1 < kernel.nc && z >= kernel.cells[cell].1 {
            cell += 1;
        }
        let p = channel.local_profile(z)?;
        let k = (((p.resonance() - d0) / step).round().max(0.0) as usize).min(nv - 1);
        c[cell * nv + k] += t_total * p.transmission_to_z * p.coupling;
        count[cell] += 1;
    }
    average_over_cells(&mut c, &count, nv);
    Ok(c)
}

/// Cell-averaged local gain spectra of `channel` on the kernel grid.
pub fn ground_truth_gain(channel: &Channel, cfg: &ScanConfig, kernel: &BackgroundKernel) -> Result<Vec<f64>> {
    let r = cfg.resolve(channel.length(), channel.min_linewidth())?;
    let nodes = r.node_positions();
    let nv = kernel.nv;
    let mut g = vec![0.0; kernel.n_cols()];
    let mut count = vec![0usize; kernel.nc];
    let t_total = channel.transmission_to(r.length);
    let mut cell = 0;
    for &z in &nodes {
        while cell + 1 < kernel.nc && z >= kernel.cells[cell].1 {
            cell += 1;
        }
        let p = channel.local_profile(z)?;
        let w = t_total * p.transmission_to_z * p.coupling;
        for j in 0..nv {
            g[cell * nv + j] += w * lorentzian(kernel.detunings[j] - p.resonance(), p.linewidth / 2.0);
        }
        count[cell] += 1;
    }
    average_over_cells(&mut g, &count, nv);
    Ok(g)
}

fn average_over_cells(v: &mut [f64], count: &[usize], nv: usize) {
    for (c, &n) in count.iter().enumerate() {
        if n > 0 {
            v[c * nv..(c + 1) * nv].iter_mut().for_each(|x| *x /= n as f64);
        }
    }
}
