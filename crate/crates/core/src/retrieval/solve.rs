//! Regularized non-negative deconvolution.
//!
//! Solves
//!
//! ```text
//! min_{c ≥ 0}  ‖K c - s‖² + λ' ‖D Φ c‖²
//! ```
//!
//! where `D` is the interior second difference along detuning and
//! `λ' = λ · tr(KᵀK) / tr((DΦ)ᵀ DΦ)` makes `λ` dimensionless. The active-set
//! method of Lawson and Hanson keeps non-negativity inside the iteration.
//! Each passive-set subproblem is solved through a Cholesky factorization of
//! its normal equations; the full gradient uses the FFT form of `K`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kernel::BackgroundKernel;
use crate::error::{Error, Result};
use crate::sonogram::Sonogram;

pub const DEFAULT_LAMBDA: f64 = 1e-2;
pub const ITERATION_CAP: usize = 10_000;

/// Deconvolved local gain on the sonogram grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainMap {
    pub positions: Vec<f64>,
    pub detunings: Vec<f64>,
    /// Row-major `[position][detuning]`, non-negative.
    pub gain: Vec<f64>,
    /// Resonance strengths `c` behind `gain = Φ c`.
    pub strength: Vec<f64>,
    /// `‖K c - s‖ / ‖s‖`.
    pub residual_norm: f64,
    pub regularization: f64,
    pub iterations: usize,
    pub config_digest: String,
}

impl GainMap {
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.detunings.len();
        &self.gain[i * n..(i + 1) * n]
    }

    pub fn to_text(&self) -> String {
        let j = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = String::from("# bocda-gainmap/1\n");
        out.push_str(&format!("# config_digest: {}\n", self.config_digest));
        out.push_str(&format!("# regularization: {}\n", self.regularization));
        out.push_str(&format!("# residual_norm: {}\n", self.residual_norm));
        out.push_str(
            "# rows: position (m); columns: probe detuning (Hz); values: local gain (unit-peak Lorentzian scale)\n",
        );
        out.push_str(&format!("# positions_m: {}\n", j(&self.positions)));
        out.push_str(&format!("# detunings_hz: {}\n", j(&self.detunings)));
        for i in 0..self.positions.len() {
            out.push_str(&j(self.row(i)));
            out.push('\n');
        }
        out
    }
}

/// Normal-equation pieces of the regularizer for one cell.
struct Regularizer {
    /// `(DΦ)ᵀ(DΦ)`, `nv × nv`.
    gram: Vec<f64>,
    weight: f64,
}

impl Regularizer {
    fn new(kernel: &BackgroundKernel, lambda: f64) -> Self {
        let nv = kernel.n_detunings();
        let phi = kernel.phi();
        let mut dphi = vec![0.0; nv.saturating_sub(2) * nv];
        for r in 0..nv.saturating_sub(2) {
            for k in 0..nv {
                dphi[r * nv + k] = phi[r * nv + k] - 2.0 * phi[(r + 1) * nv + k] + phi[(r + 2) * nv + k];
            }
        }
        let mut gram = vec![0.0; nv * nv];
        for a in 0..nv {
            for b in a..nv {
                let mut s = 0.0;
                for r in 0..nv.saturating_sub(2) {
                    s += dphi[r * nv + a] * dphi[r * nv + b];
                }
                gram[a * nv + b] = s;
                gram[b * nv + a] = s;
            }
        }
        let tr_r: f64 = (0..nv).map(|a| gram[a * nv + a]).sum::<f64>() * kernel.n_cells() as f64;
        let weight = if lambda > 0.0 && tr_r > 0.0 { lambda * kernel.frobenius_sq() / tr_r } else { 0.0 };
        Self { gram, weight }
    }

    fn entry(&self, nv: usize, a: usize, b: usize) -> f64 {
        let (ca, ka) = (a / nv, a % nv);
        let (cb, kb) = (b / nv, b % nv);
        if ca != cb || self.weight == 0.0 {
            0.0
        } else {
            self.weight * self.gram[ka * nv + kb]
        }
    }

    /// `λ' (DΦ)ᵀ(DΦ) x`, cell by cell.
    fn apply(&self, nv: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        if self.weight == 0.0 {
            return out;
        }
        for c in 0..x.len() / nv {
            let xc = &x[c * nv..(c + 1) * nv];
            if xc.iter().all(|v| *v == 0.0) {
                continue;
            }
            for a in 0..nv {
                let row = &self.gram[a * nv..(a + 1) * nv];
                out[c * nv + a] = self.weight * row.iter().zip(xc).map(|(g, v)| g * v).sum::<f64>();
            }
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solve the passive-set normal equations; `None` if not positive definite.
fn solve_passive(gram: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| gram[i][j]);
    let chol = m.cholesky()?;
    let x = chol.solve(&DVector::from_column_slice(b));
    if x.iter().all(|v| v.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

/// Result of the constrained solve in strength space.
#[derive(Debug, Clone)]
pub struct Solution {
    pub strength: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Active-set solve of the regularized non-negative problem for data `s`.
pub fn solve_nnls(kernel: &BackgroundKernel, s: &[f64], lambda: f64) -> Result<Solution> {
    let n = kernel.n_cols();
    let nv = kernel.n_detunings();
    let reg = Regularizer::new(kernel, lambda);
    let s_norm = norm(s);
    let kts = kernel.apply_adjoint(s);
    if s_norm == 0.0 {
        return Ok(Solution { strength: vec![0.0; n], residual_norm: 0.0, iterations: 0 });
    }
    let grad_tol = 1e-9 * kts.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut x = vec![0.0; n];
    let mut passive: Vec<usize> = Vec::new();
    let mut gram: Vec<Vec<f64>> = Vec::new();
    let mut excluded = vec![false; n];
    let mut in_p = vec![false; n];
    let mut w = kts.clone();
    let mut outer = 0;

    let residual = |x: &[f64]| -> f64 {
        let kx = kernel.apply(x);
        norm(&kx.iter().zip(s).map(|(a, b)| a - b).collect::<Vec<_>>()) / s_norm
    };

    let entry = |a: usize, b: usize| -> f64 { kernel.column_dot(a / nv, a % nv, b / nv, b % nv) + reg.entry(nv, a, b) };

    loop {
        let mut best = None;
        let mut best_w = grad_tol;
        for j in 0..n {
            if !in_p[j] && !excluded[j] && w[j] > best_w {
                best_w = w[j];
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        outer += 1;
        if outer > ITERATION_CAP {
            return Err(Error::NonConvergence { iterations: outer - 1, residual: residual(&x) });
        }
        let new_row: Vec<f64> = passive.iter().map(|&i| entry(i, j)).collect();
        for (row, v) in gram.iter_mut().zip(&new_row) {
            row.push(*v);
        }
        let mut row = new_row;
        row.push(entry(j, j));
        gram.push(row);
        passive.push(j);
        in_p[j] = true;

        let mut first = true;
        loop {
            let b: Vec<f64> = passive.iter().map(|&i| kts[i]).collect();
            let z = solve_passive(&gram, &b);
            let dependent = match &z {
                None => true,
                Some(z) => first && *z.last().unwrap() <= 0.0,
            };
            if dependent {
                // numerically dependent column: drop the newest entry and keep x
                if let Some(k) = passive.iter().position(|&i| i == j) {
                    remove_passive(&mut passive, &mut gram, &mut in_p, k);
                }
                excluded[j] = true;
                if z.is_none() && !first {
                    return Err(Error::NonConvergence { iterations: outer, residual: residual(&x) });
                }
                break;
            }
            let z = z.unwrap();
            if z.iter().all(|v| *v > 0.0) {
                for (k, &i) in passive.iter().enumerate() {
                    x[i] = z[k];
                }
                break;
            }
            first = false;
            let mut alpha = f64::INFINITY;
            for (k, &i) in passive.iter().enumerate() {
                if z[k] <= 0.0 {
                    let a = x[i] / (x[i] - z[k]);
                    if a < alpha {
                        alpha = a;
                    }
                }
            }
            for (k, &i) in passive.iter().enumerate() {
                x[i] += alpha * (z[k] - x[i]);
            }
            let mut k = passive.len();
            while k > 0 {
                k -= 1;
                let i = passive[k];
                if x[i] <= 1e-15 * (1.0 + x[i].abs()) {
                    x[i] = 0.0;
                    remove_passive(&mut passive, &mut gram, &mut in_p, k);
                }
            }
            if passive.is_empty() {
                break;
            }
        }

        let kx = kernel.apply(&x);
        let r: Vec<f64> = s.iter().zip(&kx).map(|(a, b)| a - b).collect();
        let g = kernel.apply_adjoint(&r);
        let rg = reg.apply(nv, &x);
        for i in 0..n {
            w[i] = g[i] - rg[i];
        }
    }

    Ok(Solution { residual_norm: residual(&x), strength: x, iterations: outer })
}

fn remove_passive(passive: &mut Vec<usize>, gram: &mut Vec<Vec<f64>>, in_p: &mut [bool], k: usize) {
    in_p[passive[k]] = false;
    passive.remove(k);
    gram.remove(k);
    for row in gram.iter_mut() {
        row.remove(k);
    }
}

/// Deconvolve `s` with `kernel` and regularization `lambda_reg`.
pub fn deconvolve_gain(s: &Sonogram, kernel: &BackgroundKernel, lambda_reg: f64) -> Result<GainMap> {
    if !(lambda_reg >= 0.0 && lambda_reg.is_finite()) {
        return Err(Error::Domain(format!("lambda must be finite and >= 0, got {lambda_reg}")));
    }
    if s.positions.len() != kernel.positions.len() || s.detunings.len() != kernel.detunings.len() {
        return Err(Error::GridMismatch(format!(
            "sonogram is {}x{}, kernel expects {}x{}",
            s.positions.len(),
            s.detunings.len(),
            kernel.positions.len(),
            kernel.detunings.len()
        )));
    }
    let close = |a: &[f64], b: &[f64], tol: f64| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()));
    if !close(&s.positions, &kernel.positions, 1e-9) || !close(&s.detunings, &kernel.detunings, 1e-12) {
        return Err(Error::GridMismatch("sonogram and kernel grids differ".into()));
    }
    let sol = solve_nnls(kernel, &s.intensity, lambda_reg)?;
    Ok(GainMap {
        positions: s.positions.clone(),
        detunings: s.detunings.clone(),
        gain: kernel.gain_of(&sol.strength),
        strength: sol.strength,
        residual_norm: sol.residual_norm,
        regularization: lambda_reg,
        iterations: sol.iterations,
        config_digest: s.meta.config_digest.clone(),
    })
}
