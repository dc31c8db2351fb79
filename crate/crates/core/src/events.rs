//! Catalogued price episodes, unit-square normalization, average overlay
//! curves and cross-series correlation.

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{slice, window_stats, EventWindow, PriceSeries};

pub const MIN_CORRELATION_OVERLAP: usize = 10;
pub const MIN_AVERAGE_GRID_POINTS: usize = 10;

/// One row of the episode table. Indices count days from 2010-08-17.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub event: u32,
    pub t1: usize,
    pub t2: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub price_change: f64,
    pub date1: NaiveDate,
    pub date2: NaiveDate,
    /// Published fit RMS in USD.
    pub rms: f64,
    /// Published RMS reduction in percent.
    pub rms_red: f64,
    pub panel: char,
}

impl CatalogEntry {
    /// The entry's window on `series`, located by date.
    pub fn resolve(&self, series: &PriceSeries) -> Result<EventWindow> {
        let w = slice(series, self.date1, self.date2)?;
        let idx = w.day_index();
        window_stats(&w, idx[0], idx[idx.len() - 1])
    }
}

const fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    match NaiveDate::from_ymd_opt(y, m, d) {
        Some(date) => date,
        None => panic!("invalid catalog date"),
    }
}

#[rustfmt::skip]
const CATALOG: [CatalogEntry; 14] = [
    entry(1, 89, 186, 0.0, 1.0, 1.0, ymd(2010, 11, 13), ymd(2011, 2, 18), 0.08, 85.07, 'a'),
    entry(2, 199, 261, 1.0, 4.0, 3.0, ymd(2011, 3, 3), ymd(2011, 5, 4), 0.2, 87.32, 'b'),
    entry(3, 199, 299, 1.0, 35.0, 34.0, ymd(2011, 3, 3), ymd(2011, 6, 11), 2.0, 76.34, 'c'),
    entry(4, 517, 699, 4.0, 13.0, 8.0, ymd(2012, 1, 15), ymd(2012, 7, 15), 0.9, 86.02, 'd'),
    entry(5, 727, 937, 10.0, 229.0, 219.0, ymd(2012, 8, 12), ymd(2013, 3, 10), 6.0, 85.30, 'e'),
    entry(6, 1017, 1174, 66.0, 1132.0, 1065.0, ymd(2013, 5, 29), ymd(2013, 11, 2), 28.0, 91.19, 'f'),
    entry(7, 1917, 2099, 365.0, 705.0, 339.0, ymd(2015, 11, 15), ymd(2016, 5, 15), 21.0, 95.17, 'g'),
    entry(8, 2191, 2467, 596.0, 2953.0, 2357.0, ymd(2016, 8, 15), ymd(2017, 5, 18), 165.0, 86.78, 'h'),
    entry(9, 2454, 2524, 1933.0, 4066.0, 2133.0, ymd(2017, 5, 5), ymd(2017, 7, 14), 421.0, 84.60, 'i'),
    entry(10, 2191, 2647, 596.0, 17803.0, 17206.0, ymd(2016, 8, 15), ymd(2017, 11, 14), 1033.0, 74.51, 'j'),
    entry(11, 2999, 3204, 3236.0, 11007.0, 7770.0, ymd(2018, 11, 1), ymd(2019, 5, 25), 1044.0, 80.83, 'k'),
    entry(12, 3561, 3728, 9048.0, 19104.0, 10055.0, ymd(2020, 5, 16), ymd(2020, 10, 30), 1312.0, 89.10, 'l'),
    entry(13, 3561, 3773, 9048.0, 40789.0, 31740.0, ymd(2020, 5, 16), ymd(2020, 12, 14), 2503.0, 84.70, 'm'),
    entry(14, 3561, 3815, 9048.0, 57533.0, 48484.0, ymd(2020, 5, 16), ymd(2021, 1, 25), 5621.0, 75.25, 'n'),
];

#[allow(clippy::too_many_arguments)]
const fn entry(
    event: u32,
    t1: usize,
    t2: usize,
    p_min: f64,
    p_max: f64,
    price_change: f64,
    date1: NaiveDate,
    date2: NaiveDate,
    rms: f64,
    rms_red: f64,
    panel: char,
) -> CatalogEntry {
    CatalogEntry {
        event,
        t1,
        t2,
        p_min,
        p_max,
        price_change,
        date1,
        date2,
        rms,
        rms_red,
        panel,
    }
}

/// The fourteen BTC episodes with their published statistics.
pub fn catalog() -> &'static [CatalogEntry] {
    &CATALOG
}

pub fn catalog_entry(event: u32) -> Result<&'static CatalogEntry> {
    CATALOG
        .iter()
        .find(|e| e.event == event)
        .ok_or_else(|| Error::InvalidParameter(format!("no catalog event {event} (valid: 1-14)")))
}

/// An episode mapped onto the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedEvent {
    pub event_id: Option<u32>,
    pub tau: Vec<f64>,
    pub nu: Vec<f64>,
    pub window: EventWindow,
}

impl NormalizedEvent {
    /// Maps back to `(day_index, price)` pairs.
    pub fn denormalize(&self) -> Vec<(f64, f64)> {
        let w = &self.window;
        let span = (w.t2 - w.t1) as f64;
        let range = w.p_max - w.p_min;
        self.tau
            .iter()
            .zip(&self.nu)
            .map(|(t, n)| (w.t1 as f64 + t * span, w.p_min + n * range))
            .collect()
    }

    /// Normalized time at which `nu` first reaches `level`.
    pub fn first_crossing(&self, level: f64) -> Option<f64> {
        self.nu
            .iter()
            .position(|&n| n >= level)
            .map(|i| self.tau[i])
    }

    /// Linear interpolation of `nu` at normalized time `tau`.
    pub fn nu_at(&self, tau: f64) -> f64 {
        let i = self.tau.partition_point(|&t| t < tau);
        if i == 0 {
            return self.nu[0];
        }
        if i >= self.tau.len() {
            return self.nu[self.nu.len() - 1];
        }
        let (t0, t1) = (self.tau[i - 1], self.tau[i]);
        let f = (tau - t0) / (t1 - t0);
        self.nu[i - 1] + f * (self.nu[i] - self.nu[i - 1])
    }
}

/// `tau = (t − t1)/(t2 − t1)`, `nu = (x − p_min)/(p_max − p_min)` over the window.
///
/// Extremes are recomputed from `series` so `nu` always spans `[0, 1]`.
pub fn normalize(series: &PriceSeries, window: &EventWindow) -> Result<NormalizedEvent> {
    let w = window_stats(series, window.t1, window.t2)?;
    let samples = series.index_range(w.t1, w.t2)?;
    let span = (w.t2 - w.t1) as f64;
    let range = w.p_max - w.p_min;
    Ok(NormalizedEvent {
        event_id: None,
        tau: samples
            .day_index()
            .iter()
            .map(|&t| (t - w.t1) as f64 / span)
            .collect(),
        nu: samples
            .values()
            .iter()
            .map(|&x| (x - w.p_min) / range)
            .collect(),
        window: w,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragePoint {
    pub tau: f64,
    pub mean: f64,
    /// Population standard deviation across events.
    pub std: f64,
}

/// Pointwise mean and spread of normalized events on a uniform `tau` grid.
pub fn average_curve(events: &[NormalizedEvent], grid_points: usize) -> Result<Vec<AveragePoint>> {
    if events.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "averaging needs at least 2 events, got {}",
            events.len()
        )));
    }
    if grid_points < MIN_AVERAGE_GRID_POINTS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_AVERAGE_GRID_POINTS} grid points, got {grid_points}"
        )));
    }
    let k = events.len() as f64;
    Ok((0..grid_points)
        .map(|i| {
            let tau = i as f64 / (grid_points - 1) as f64;
            let vals: Vec<f64> = events.iter().map(|e| e.nu_at(tau)).collect();
            let mean = vals.iter().sum::<f64>() / k;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
            AveragePoint {
                tau,
                mean,
                std: var.sqrt(),
            }
        })
        .collect())
}

/// Mean curve value at `tau`, interpolated between grid points.
pub fn curve_at(curve: &[AveragePoint], tau: f64) -> f64 {
    let i = curve.partition_point(|p| p.tau < tau);
    if i == 0 {
        return curve[0].mean;
    }
    if i >= curve.len() {
        return curve[curve.len() - 1].mean;
    }
    let (a, b) = (curve[i - 1], curve[i]);
    a.mean + (tau - a.tau) / (b.tau - a.tau) * (b.mean - a.mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub r2: f64,
    pub n: usize,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
}

/// Squared Pearson correlation of prices over the dates both series share.
pub fn correlate(a: &PriceSeries, b: &PriceSeries) -> Result<Correlation> {
    correlate_recent(a, b, usize::MAX)
}

/// Like [`correlate`], restricted to the last `n` shared dates.
pub fn correlate_recent(a: &PriceSeries, b: &PriceSeries, n: usize) -> Result<Correlation> {
    let (mut i, mut j) = (0, 0);
    let (mut xs, mut ys, mut dates) = (Vec::new(), Vec::new(), Vec::new());
    while i < a.len() && j < b.len() {
        let (da, db) = (a.dates()[i], b.dates()[j]);
        if da == db {
            xs.push(a.values()[i]);
            ys.push(b.values()[j]);
            dates.push(da);
            i += 1;
            j += 1;
        } else if da < db {
            i += 1;
        } else {
            j += 1;
        }
    }
    let skip = xs.len().saturating_sub(n);
    let (xs, ys, dates) = (&xs[skip..], &ys[skip..], &dates[skip..]);
    let n = xs.len();
    if n < MIN_CORRELATION_OVERLAP {
        return Err(Error::InsufficientOverlap {
            needed: MIN_CORRELATION_OVERLAP,
            got: n,
        });
    }
    let r = pearson(xs, ys)
        .ok_or_else(|| Error::DegenerateWindow("zero variance in correlated series".into()))?;
    Ok(Correlation {
        r2: r * r,
        n,
        first_date: dates[0],
        last_date: dates[n - 1],
    })
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Peak-to-trough swings losing at least `min_drop` (a fraction) and
/// spanning at least `min_days` samples, found with a zigzag filter whose
/// reversal threshold is `min_drop` in both directions.
pub fn decline_episodes(
    series: &PriceSeries,
    min_drop: f64,
    min_days: usize,
) -> Result<Vec<EventWindow>> {
    if !(min_drop > 0.0 && min_drop < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "drop fraction must be in (0, 1), got {min_drop}"
        )));
    }
    let v = series.values();
    let idx = series.day_index();
    let mut swings = Vec::new();
    let (mut peak, mut trough) = (0usize, 0usize);
    let mut falling = false;
    for i in 1..v.len() {
        if falling {
            if v[i] < v[trough] {
                trough = i;
            } else if v[i] >= v[trough] * (1.0 + min_drop) {
                swings.push((peak, trough));
                falling = false;
                peak = i;
            }
        } else if v[i] > v[peak] {
            peak = i;
        } else if v[i] <= v[peak] * (1.0 - min_drop) {
            falling = true;
            trough = i;
        }
    }
    if falling {
        swings.push((peak, trough));
    }
    swings
        .into_iter()
        .filter(|&(p, t)| t + 1 - p >= min_days)
        .map(|(p, t)| window_stats(series, idx[p], idx[t]))
        .collect()
}
