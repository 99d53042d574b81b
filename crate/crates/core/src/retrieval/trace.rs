//! Per-position peak traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sonogram::Sonogram;

/// Half width of the band averaged into `peak_intensity`, Hz.
pub const DEFAULT_INTENSITY_BAND_HZ: f64 = 12e6;

/// Location and strength of the spectral maximum at each position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfsTrace {
    pub positions: Vec<f64>,
    pub peak_bfs: Vec<f64>,
    /// Mean intensity within the band around the grid maximum.
    pub peak_intensity: Vec<f64>,
    /// Positions whose column was identically zero.
    pub excluded: Vec<f64>,
    pub resolution_m: f64,
    pub config_digest: String,
}

impl BfsTrace {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Mean grid spacing of the positions.
    pub fn position_step(&self) -> f64 {
        if self.positions.len() < 2 {
            return 0.0;
        }
        (self.positions[self.positions.len() - 1] - self.positions[0]) / (self.positions.len() - 1) as f64
    }

    pub fn check_same_grid(&self, other: &BfsTrace) -> Result<()> {
        if self.positions != other.positions {
            return Err(Error::GridMismatch(format!(
                "trace grids differ ({} vs {} positions)",
                self.positions.len(),
                other.positions.len()
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# bocda-trace/1\n");
        out.push_str(&format!("# config_digest: {}\n", self.config_digest));
        out.push_str(&format!("# resolution_m: {}\n", self.resolution_m));
        let ex: Vec<String> = self.excluded.iter().map(|x| x.to_string()).collect();
        out.push_str(&format!("# excluded_positions_m: {}\n", ex.join(" ")));
        out.push_str("position_m,peak_bfs_hz,peak_intensity\n");
        for i in 0..self.positions.len() {
            out.push_str(&format!("{},{},{}\n", self.positions[i], self.peak_bfs[i], self.peak_intensity[i]));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut t = BfsTrace {
            positions: vec![],
            peak_bfs: vec![],
            peak_intensity: vec![],
            excluded: vec![],
            resolution_m: 0.0,
            config_digest: String::new(),
        };
        let bad = |m: String| Error::Parse(format!("trace: {m}"));
        for line in text.lines() {
            if let Some(h) = line.strip_prefix('#') {
                let h = h.trim();
                if let Some(v) = h.strip_prefix("config_digest:") {
                    t.config_digest = v.trim().to_string();
                } else if let Some(v) = h.strip_prefix("resolution_m:") {
                    t.resolution_m = v.trim().parse().map_err(|e| bad(format!("{e}")))?;
                } else if let Some(v) = h.strip_prefix("excluded_positions_m:") {
                    for x in v.split_whitespace() {
                        t.excluded.push(x.parse().map_err(|e| bad(format!("{e}")))?);
                    }
                }
            } else if line.starts_with("position_m") || line.trim().is_empty() {
                continue;
            } else {
                let f: Vec<f64> = line
                    .split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|e| bad(format!("`{x}`: {e}"))))
                    .collect::<Result<_>>()?;
                if f.len() != 3 {
                    return Err(bad(format!("expected 3 columns, got {}", f.len())));
                }
                t.positions.push(f[0]);
                t.peak_bfs.push(f[1]);
                t.peak_intensity.push(f[2]);
            }
        }
        Ok(t)
    }
}

/// Trace over any position × detuning grid of non-negative values.
pub fn peak_trace_from_grid(
    positions: &[f64],
    detunings: &[f64],
    values: &[f64],
    band_hz: f64,
    resolution_m: f64,
    config_digest: &str,
) -> BfsTrace {
    let nd = detunings.len();
    let mut t = BfsTrace {
        positions: Vec::new(),
        peak_bfs: Vec::new(),
        peak_intensity: Vec::new(),
        excluded: Vec::new(),
        resolution_m,
        config_digest: config_digest.to_string(),
    };
    for (i, &z) in positions.iter().enumerate() {
        let row = &values[i * nd..(i + 1) * nd];
        let mut j = 0;
        for k in 1..nd {
            if row[k] > row[j] {
                j = k;
            }
        }
        if nd == 0 || row[j] <= 0.0 {
            t.excluded.push(z);
            continue;
        }
        let mut nu = detunings[j];
        if j > 0 && j + 1 < nd {
            let (y0, y1, y2) = (row[j - 1], row[j], row[j + 1]);
            let den = y0 - 2.0 * y1 + y2;
            if den < 0.0 {
                let d = (0.5 * (y0 - y2) / den).clamp(-0.5, 0.5);
                let step = 0.5 * (detunings[j + 1] - detunings[j - 1]);
                nu += d * step;
            }
        }
        let (mut sum, mut cnt) = (0.0, 0usize);
        for k in 0..nd {
            if (detunings[k] - detunings[j]).abs() <= band_hz {
                sum += row[k];
                cnt += 1;
            }
        }
        t.positions.push(z);
        t.peak_bfs.push(nu);
        t.peak_intensity.push(sum / cnt as f64);
    }
    t
}

/// Peak trace of a sonogram with the default intensity band.
pub fn peak_bfs_trace(s: &Sonogram) -> BfsTrace {
    peak_bfs_trace_with_band(s, DEFAULT_INTENSITY_BAND_HZ)
}

pub fn peak_bfs_trace_with_band(s: &Sonogram, band_hz: f64) -> BfsTrace {
    peak_trace_from_grid(&s.positions, &s.detunings, &s.intensity, band_hz, s.meta.resolution_m, &s.meta.config_digest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::lorentzian;

    fn grid(nu0: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let det: Vec<f64> = (0..201).map(|k| 10.75e9 + k as f64 * 1e6).collect();
        let vals: Vec<f64> = det.iter().map(|&n| lorentzian(n - nu0, 13.5e6)).collect();
        (vec![1.0], det, vals)
    }

    #[test]
    fn parabolic_refinement_off_grid() {
        for off in [0.0, 0.1e6, 0.25e6, 0.4e6, 0.77e6] {
            let nu0 = 10.85e9 + off;
            let (p, d, v) = grid(nu0);
            let t = peak_trace_from_grid(&p, &d, &v, 12e6, 0.027, "");
            // error of a 3-point parabola on a Lorentzian is second order in step/γ
            let step = 1e6;
            let bound = step * step / 13.5e6;
            assert!((t.peak_bfs[0] - nu0).abs() < bound, "{off}: {}", t.peak_bfs[0] - nu0);
        }
    }

    #[test]
    fn zero_columns_are_excluded() {
        let (_, d, v) = grid(10.85e9);
        let mut vals = vec![0.0; d.len()];
        vals.extend(v);
        let t = peak_trace_from_grid(&[1.0, 2.0], &d, &vals, 12e6, 0.027, "");
        assert_eq!(t.positions, vec![2.0]);
        assert_eq!(t.excluded, vec![1.0]);
    }

    #[test]
    fn ties_go_to_lower_detuning() {
        let d = vec![1.0, 2.0, 3.0, 4.0];
        let v = vec![0.0, 1.0, 1.0, 0.0];
        let t = peak_trace_from_grid(&[0.0], &d, &v, 0.5, 0.0, "");
        assert!(t.peak_bfs[0] <= 2.5);
        assert!(t.peak_bfs[0] >= 2.0);
    }

    #[test]
    fn text_round_trip() {
        let (p, d, v) = grid(10.8512e9);
        let t = peak_trace_from_grid(&p, &d, &v, 12e6, 0.0267, "abc");
        assert_eq!(BfsTrace::from_text(&t.to_text()).unwrap(), t);
    }
}
