//! Correlation-domain Brillouin analysis of optical fiber channels.
//!
//! The crate simulates a frequency-modulated Brillouin correlation-domain
//! measurement of a declarative fiber channel, retrieves local gain spectra
//! and per-position traces from the resulting sonogram, and turns those into
//! located eavesdropping events. A Rayleigh OTDR simulator with a step
//! detector serves as the conventional baseline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod detect;
pub mod digest;
pub mod error;
pub mod fiber;
pub mod forward;
pub mod otdr;
pub mod pipeline;
pub mod retrieval;
pub mod sonogram;

pub use error::{Error, Result, Violation};
pub use fiber::{brillouin_shift, validate_channel, Channel, Feature, FeatureKind, FiberSegment, LocalParams};
pub use forward::{synthesize_sonogram, ScanConfig, Sweep};
pub use sonogram::Sonogram;
