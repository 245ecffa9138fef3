//! Cross-frequency bispectral analysis toolkit for epoched EEG-like data:
//! bicoherence estimation, band-pair feature extraction, random-forest
//! decoding with permutation importance, and nonparametric statistics.
//!
//! The pipeline is deterministic: every run is driven by a [`io::RunConfig`]
//! whose content digest and master seed are stamped into all outputs, and
//! reruns with the same digest produce byte-identical numeric artifacts for
//! any thread count.

pub mod bands;
pub mod bispectrum;
pub mod cv;
pub mod dsp;
pub mod error;
pub mod features;
pub mod forest;
pub mod io;
pub mod pipeline;
pub mod recording;
pub mod report;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
