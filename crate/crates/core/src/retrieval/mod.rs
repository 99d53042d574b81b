//! Retrieval of local gain spectra and per-position traces from a sonogram.

pub mod kernel;
pub mod solve;
pub mod trace;

pub use kernel::{
    background_kernel, ground_truth_gain, ground_truth_strength, kernel_bytes, BackgroundKernel, KernelOptions,
};
pub use solve::{deconvolve_gain, solve_nnls, GainMap, Solution, DEFAULT_LAMBDA};
pub use trace::{peak_bfs_trace, peak_bfs_trace_with_band, peak_trace_from_grid, BfsTrace, DEFAULT_INTENSITY_BAND_HZ};
