//! Fixtures shared by the criterion benches.

use hsfkit_core::hsf::HsfModel;
use hsfkit_core::ingest::PriceSeries;
use hsfkit_core::spectral::{synth_signal, synthetic_dates, SyntheticKind};

/// Roughly the length of the daily BTC history.
pub const HISTORY_DAYS: usize = 3968;

pub fn step_signal(n: usize) -> PriceSeries {
    synth_signal(SyntheticKind::SineStep { dz: 1.5 }, n).expect("valid length")
}

/// Exponential-looking history with a deterministic wiggle, strictly positive.
pub fn price_history(n: usize) -> PriceSeries {
    let values = (0..n)
        .map(|i| {
            let t = i as f64;
            0.06 * (t * 13.3 / n as f64).exp() * (1.0 + 0.3 * (t / 47.0).sin())
        })
        .collect();
    PriceSeries::new("history", synthetic_dates(n), values).expect("positive values")
}

/// HSF episode of `len` days with a 2% deterministic ripple.
pub fn episode(len: usize) -> PriceSeries {
    let model = HsfModel::covering(500.0, 503.0, 11.0, 0, len - 1).expect("valid model");
    let days: Vec<usize> = (0..len).collect();
    let values = model
        .evaluate(&days)
        .expect("covered")
        .into_iter()
        .enumerate()
        .map(|(i, v)| v * (1.0 + 0.02 * (i as f64 * 1.7).sin()))
        .collect();
    PriceSeries::new("episode", synthetic_dates(len), values).expect("positive values")
}
