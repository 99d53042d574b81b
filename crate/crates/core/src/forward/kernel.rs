//! Correlation geometry and the local gain spectrum of a frequency-modulated
//! pump–probe pair.
//!
//! Both waves carry the same sinusoidal frequency modulation. At a position
//! whose optical delay is `u` away from a correlation point, the pump–probe
//! detuning oscillates as
//!
//! ```text
//! δ(t) = A · sin(2π f_m t),    A(u) = Δf · |sin(2π f_m u / v_g)|
//! ```
//!
//! Averaged over time, δ follows the arcsine density on `(-A, A)`, and the
//! Brillouin gain seen at probe detuning ν is the Lorentzian resonance
//! convolved with that density:
//!
//! ```text
//! S(ν) = ∫ p_A(δ) · γ² / ((ν - ν_B - δ)² + γ²) dδ
//!      = γ · Im[ 1 / (√(w - A) · √(w + A)) ],   w = (ν - ν_B) - iγ
//! ```
//!
//! with `γ` the half width. The product of principal roots selects the
//! branch that decays for large `|w|`; `√(w² - A²)` would not.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::fiber::LocalParams;

/// Correlation points `n·v_g/(2 f_m)`, `n ≥ 1`, that fall in `[0, length]`.
pub fn correlation_positions(f_m: f64, v_g: f64, length: f64) -> Vec<f64> {
    correlation_positions_offset(f_m, v_g, length, 0.0)
}

/// Correlation points shifted into the fiber frame by `z_offset`.
pub fn correlation_positions_offset(f_m: f64, v_g: f64, length: f64, z_offset: f64) -> Vec<f64> {
    let spacing = correlation_spacing(f_m, v_g);
    if !(spacing.is_finite() && spacing > 0.0) {
        return Vec::new();
    }
    let first = ((z_offset) / spacing).ceil().max(1.0) as u64;
    let mut out = Vec::new();
    let mut n = first;
    loop {
        let z = n as f64 * spacing - z_offset;
        if z > length {
            break;
        }
        if z >= 0.0 {
            out.push(z);
        }
        n += 1;
    }
    out
}

pub fn correlation_spacing(f_m: f64, v_g: f64) -> f64 {
    v_g / (2.0 * f_m)
}

/// Width of the correlation peak, `Δν_B·v_g / (2π·f_m·Δf)`.
pub fn resolution(linewidth: f64, v_g: f64, f_m: f64, delta_f: f64) -> f64 {
    linewidth * v_g / (TAU * f_m * delta_f)
}

/// Amplitude of the detuning excursion at delay `z` from a correlation point.
pub fn beat_amplitude(z: f64, f_m: f64, delta_f: f64, v_g: f64) -> f64 {
    delta_f * (TAU * f_m * z / v_g).sin().abs()
}

/// Time-averaged density of `A·sin(2π f_m t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetuningDensity {
    /// All mass at zero detuning (correlation point).
    PointMass,
    Arcsine {
        amplitude: f64,
    },
}

pub fn detuning_density(amplitude: f64) -> DetuningDensity {
    if amplitude > 0.0 {
        DetuningDensity::Arcsine { amplitude }
    } else {
        DetuningDensity::PointMass
    }
}

impl DetuningDensity {
    /// Density value; the point mass reports `+∞` at 0 and 0 elsewhere.
    pub fn pdf(&self, delta: f64) -> f64 {
        match *self {
            DetuningDensity::PointMass => {
                if delta == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            DetuningDensity::Arcsine { amplitude: a } => {
                if delta.abs() < a {
                    1.0 / (PI * (a * a - delta * delta).sqrt())
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, delta: f64) -> f64 {
        match *self {
            DetuningDensity::PointMass => {
                if delta >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DetuningDensity::Arcsine { amplitude: a } => 0.5 + (delta / a).clamp(-1.0, 1.0).asin() / PI,
        }
    }

    /// `∫ f(δ) p(δ) dδ` by trapezoid in θ after `δ = A·sin θ`.
    ///
    /// The substitution removes the endpoint singularities; over a full period
    /// the integrand is smooth and periodic, so the trapezoid rule converges
    /// geometrically.
    pub fn expectation(&self, nodes: usize, f: impl Fn(f64) -> f64) -> f64 {
        match *self {
            DetuningDensity::PointMass => f(0.0),
            DetuningDensity::Arcsine { amplitude: a } => {
                let n = nodes.max(1);
                let mut acc = 0.0;
                for k in 0..n {
                    let th = TAU * (k as f64 + 0.5) / n as f64;
                    acc += f(a * th.sin());
                }
                acc / n as f64
            }
        }
    }
}

/// Unit-peak Lorentzian with half width `gamma`.
#[inline]
pub fn lorentzian(x: f64, gamma: f64) -> f64 {
    gamma * gamma / (x * x + gamma * gamma)
}

/// Arcsine density convolved with a unit-peak Lorentzian, in closed form.
///
/// `x` is the offset from the resonance centre, `gamma` the half width.
#[inline]
pub fn arcsine_lorentzian(amplitude: f64, x: f64, gamma: f64) -> f64 {
    if amplitude == 0.0 {
        return lorentzian(x, gamma);
    }
    let w = Complex64::new(x, -gamma);
    let d = (w - amplitude).sqrt() * (w + amplitude).sqrt();
    // Im(1/d) = -Im(d)/|d|²
    let v = -gamma * d.im / d.norm_sqr();
    v.max(0.0)
}

/// Same convolution by θ-trapezoid; reference route for the closed form.
pub fn arcsine_lorentzian_quadrature(amplitude: f64, x: f64, gamma: f64, nodes: usize) -> f64 {
    detuning_density(amplitude).expectation(nodes, |d| lorentzian(x - d, gamma))
}

/// Gain density at probe detuning `nu` for local parameters and excursion `amplitude`.
pub fn local_gain_spectrum(params: &LocalParams, amplitude: f64, nu: f64) -> f64 {
    params.coupling * arcsine_lorentzian(amplitude, nu - params.resonance(), params.linewidth / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C: f64 = 299_792_458.0;

    #[test]
    fn spacing_and_resolution_numbers() {
        let vg = C / 1.468;
        let pts = correlation_positions(699e3, vg, 1000.0);
        assert!(pts.len() >= 2);
        let sp = pts[1] - pts[0];
        assert!((sp - 146.08).abs() < 0.01, "{sp}");
        assert!(correlation_positions(699e3, vg, 100.0).is_empty());
        let dz = resolution(27e6, vg, 699e3, 47e9);
        assert!((dz - 0.02671).abs() < 1e-4, "{dz}");
        assert_eq!(resolution(27e6, vg, 699e3, 94e9), dz / 2.0);
    }

    #[test]
    fn beat_amplitude_values() {
        let vg = 2.0419e8;
        let fm = 699e3;
        let zm = vg / (2.0 * fm);
        assert!(beat_amplitude(zm, fm, 47e9, vg) < 1e-3 * 47e9 * 1e-9);
        assert!((beat_amplitude(zm + vg / (4.0 * fm), fm, 47e9, vg) - 47e9).abs() < 1.0);
        let a = beat_amplitude(zm + 0.01, fm, 47e9, vg);
        assert!((a - 10.11e6).abs() < 0.01e6, "{a}");
    }

    #[test]
    fn density_values() {
        let d = detuning_density(1e6);
        assert!((d.pdf(0.0) - 1.0 / (PI * 1e6)).abs() < 1e-18);
        assert_eq!(d.pdf(2e6), 0.0);
        assert!((d.expectation(512, |_| 1.0) - 1.0).abs() < 1e-12);
        assert_eq!(d.cdf(1e6), 1.0);
        assert_eq!(d.cdf(-1e6), 0.0);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let g = 13.5e6;
        for a in [0.0, 0.1 * g, g, 3.0 * g, 10.0 * g] {
            for k in -40..=40 {
                let x = k as f64 * 5e6;
                let cf = arcsine_lorentzian(a, x, g);
                let q = arcsine_lorentzian_quadrature(a, x, g, 4096);
                assert!((cf - q).abs() < 1e-9, "A={a} x={x} {cf} {q}");
            }
        }
    }

    #[test]
    fn correlation_point_is_lorentzian() {
        let g = 13.5e6;
        for k in -10..=10 {
            let x = k as f64 * 3.3e6;
            assert_eq!(arcsine_lorentzian(0.0, x, g), lorentzian(x, g));
        }
        let tiny = arcsine_lorentzian(1e-3, 0.0, g);
        assert!((tiny - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wide_excursion_has_edge_maxima() {
        let g = 13.5e6;
        let a = 20.0 * g;
        let at = |x: f64| arcsine_lorentzian(a, x, g);
        assert!(at(a - g) > at(0.0));
        assert!(at(-a + g) > at(0.0));
        assert!(at(2.0 * a) < at(0.0));
    }

    proptest! {
        #[test]
        fn spectrum_bounded(a in 0.0f64..1e9, x in -2e9f64..2e9, g in 1e5f64..1e8, c in 0.0f64..3.0) {
            let p = LocalParams { bfs: 0.0, feature_shift: 0.0, linewidth: 2.0 * g, coupling: c, transmission_to_z: 1.0, n_g: 1.468 };
            let s = local_gain_spectrum(&p, a, x);
            prop_assert!(s >= 0.0);
            prop_assert!(s <= c * (1.0 + 1e-12));
        }

        #[test]
        fn amplitude_periodic(z in 0.0f64..10.0, fm in 6e5f64..8e5) {
            let vg = C / 1.468;
            let a = beat_amplitude(z, fm, 47e9, vg);
            let b = beat_amplitude(z + vg / (2.0 * fm), fm, 47e9, vg);
            prop_assert!((a - b).abs() <= 47e9 * 1e-9);
        }

        #[test]
        fn resolution_shrinks_with_bandwidth(df in 1e9f64..1e11, k in 1.01f64..10.0) {
            let vg = C / 1.468;
            prop_assert!(resolution(27e6, vg, 699e3, df * k) < resolution(27e6, vg, 699e3, df));
        }
    }
}
