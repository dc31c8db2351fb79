//! Analysis toolkit for speculative price episodes in daily asset prices.
//!
//! - [`ingest`]: CSV parsing, date windows, window extremes.
//! - [`spectral`]: periodograms, Hann-tapered spectrograms, discontinuity detection.
//! - [`benford`]: first-digit conformity with a Pearson χ² test.
//! - [`hsf`]: the Hockey Stick Function recurrence, resampling, RMS metrics and
//!   brute-force calibration (rising and declining).
//! - [`events`]: the episode catalog, unit-square normalization, average
//!   overlay curves and correlation.

// `!(x > 0.0)` is used on purpose so NaN lands on the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benford;
pub mod error;
pub mod events;
pub mod hsf;
pub mod ingest;
pub mod spectral;

pub use benford::{benford_test, BenfordReport};
pub use error::{Error, Result};
pub use events::{catalog, correlate, normalize, CatalogEntry, Correlation, NormalizedEvent};
pub use hsf::{calibrate, fit_decline, generate, CalibrationGrid, Direction, FitResult, HsfModel};
pub use ingest::{parse_price_csv, slice, window_stats, EventWindow, PriceSeries};
pub use spectral::{periodogram, spectrogram, Periodogram, Spectrogram, SyntheticKind};
