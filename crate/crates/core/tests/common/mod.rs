#![allow(dead_code)]

use hsfkit_core::hsf::{rms_values, CalibrationGrid, HsfModel};
use hsfkit_core::ingest::{EventWindow, PriceSeries};
use hsfkit_core::spectral::synthetic_dates;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Brute-force minimum over the grid, scoring every candidate through the
/// public model path. Returns `(rms, dt, p1, p2)`.
pub fn exhaustive_oracle(
    data: &PriceSeries,
    window: &EventWindow,
    grid: &CalibrationGrid,
) -> (f64, f64, f64, f64) {
    let w = data.index_range(window.t1, window.t2).unwrap();
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    for &dt in &grid.dt {
        for &p1 in &grid.p1 {
            for &g in &grid.growth {
                let p2 = p1 * (1.0 + g);
                let model = HsfModel::covering(p1, p2, dt, window.t1, window.t2).unwrap();
                let m = model.evaluate(w.day_index()).unwrap();
                let r = rms_values(w.values(), &m);
                let r = if r.is_finite() { r } else { f64::INFINITY };
                let cand = (r, dt, p1, p2);
                if cand.0 < best.0
                    || (cand.0 == best.0 && (cand.1, cand.2, cand.3) < (best.1, best.2, best.3))
                {
                    best = cand;
                }
            }
        }
    }
    best
}

/// Daily series of `len` samples drawn from an HSF anchored at day 0.
pub fn hsf_series(p1: f64, p2: f64, dt: f64, len: usize) -> PriceSeries {
    let model = HsfModel::covering(p1, p2, dt, 0, len - 1).unwrap();
    let days: Vec<usize> = (0..len).collect();
    let values = model.evaluate(&days).unwrap();
    PriceSeries::new("hsf", synthetic_dates(len), values).unwrap()
}

/// Same, with multiplicative gaussian noise of relative size `sigma`.
pub fn noisy_hsf_series(
    p1: f64,
    p2: f64,
    dt: f64,
    len: usize,
    sigma: f64,
    seed: u64,
) -> PriceSeries {
    let clean = hsf_series(p1, p2, dt, len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let values = clean
        .values()
        .iter()
        .map(|v| v * (1.0 + noise.sample(&mut rng)))
        .collect();
    PriceSeries::new("hsf-noisy", synthetic_dates(len), values).unwrap()
}

pub fn whole_window(s: &PriceSeries) -> EventWindow {
    hsfkit_core::ingest::full_window(s).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
