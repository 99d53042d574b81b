//! Frequency-domain forward model of the correlation-domain measurement.

pub mod kernel;
pub mod scan;
pub mod synth;

pub use kernel::{
    arcsine_lorentzian, arcsine_lorentzian_quadrature, beat_amplitude, correlation_positions,
    correlation_positions_offset, correlation_spacing, detuning_density, local_gain_spectrum, lorentzian, resolution,
    DetuningDensity,
};
pub use scan::{validate_scan, NoiseModel, ResolvedScan, ScanConfig, Sweep};
pub use synth::{apply_noise, config_digest, synthesize_noiseless, synthesize_sonogram, Nodes};
