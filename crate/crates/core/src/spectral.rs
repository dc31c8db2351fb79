//! Periodograms, short-time spectrograms and discontinuity detection.
//!
//! Power is normalized as `|X_k|² / N` for both the whole-series periodogram
//! and each spectrogram column. The whole-series periodogram uses the raw
//! values; spectrogram columns remove the window mean and apply a Hann taper
//! so that a level shift inside a window shows up as a broadband stripe.

use std::sync::Arc;

use chrono::{Days, NaiveDate};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::PriceSeries;

pub const MIN_PERIODOGRAM_LEN: usize = 8;
pub const DEFAULT_WINDOW_LEN: usize = 128;
pub const DEFAULT_HOP: usize = 16;
/// Column-total multiple of the median that flags a discontinuity.
pub const DEFAULT_THRESHOLD: f64 = 2.0;

/// Offset added to synthetic signals so every value is a valid price.
pub const SYNTH_OFFSET: f64 = 2.0;
/// Samples after this index carry the step or second sinusoid.
pub const SYNTH_BREAK: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    /// Cycles per sample, `k / N` for `k = 1..=N/2`.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    /// Zero-frequency term, kept out of `power`.
    pub dc_power: f64,
    pub n: usize,
}

impl Periodogram {
    /// Signal energy recovered from the one-sided spectrum; equals `Σ x²`.
    pub fn total_energy(&self) -> f64 {
        let doubled: f64 = self.power.iter().sum::<f64>() * 2.0;
        let nyquist = if self.n % 2 == 0 {
            self.power.last().copied().unwrap_or(0.0)
        } else {
            0.0
        };
        self.dc_power + doubled - nyquist
    }

    /// Index of the strongest bin.
    pub fn peak(&self) -> usize {
        argmax(&self.power)
    }

    pub fn median_power(&self) -> f64 {
        median(&self.power)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub window_len: usize,
    pub hop: usize,
    /// Day index at the middle of each window.
    pub window_centers: Vec<usize>,
    pub frequencies: Vec<f64>,
    /// `power[column][row]`, one column per window placement.
    pub power: Vec<Vec<f64>>,
}

impl Spectrogram {
    pub fn column_totals(&self) -> Vec<f64> {
        self.power.iter().map(|c| c.iter().sum()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn one_sided_power(fft: &dyn Fft<f64>, samples: impl Iterator<Item = f64>) -> (f64, Vec<f64>) {
    let mut buf: Vec<Complex<f64>> = samples.map(|x| Complex::new(x, 0.0)).collect();
    let n = buf.len();
    fft.process(&mut buf);
    let scale = 1.0 / n as f64;
    let power = buf[1..=n / 2]
        .iter()
        .map(|c| c.norm_sqr() * scale)
        .collect();
    (buf[0].norm_sqr() * scale, power)
}

fn frequencies(n: usize) -> Vec<f64> {
    (1..=n / 2).map(|k| k as f64 / n as f64).collect()
}

pub fn periodogram(series: &PriceSeries) -> Result<Periodogram> {
    periodogram_values(series.values())
}

/// Untapered periodogram of raw values, DC excluded from `power`.
pub fn periodogram_values(values: &[f64]) -> Result<Periodogram> {
    let n = values.len();
    if n < MIN_PERIODOGRAM_LEN {
        return Err(Error::TooShort {
            needed: MIN_PERIODOGRAM_LEN,
            got: n,
        });
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    let (dc_power, power) = one_sided_power(fft.as_ref(), values.iter().copied());
    Ok(Periodogram {
        frequencies: frequencies(n),
        power,
        dc_power,
        n,
    })
}

/// Symmetric Hann taper.
pub fn hann(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let m = (len - 1) as f64;
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / m).cos())
        .collect()
}

pub fn spectrogram(series: &PriceSeries, window_len: usize, hop: usize) -> Result<Spectrogram> {
    spectrogram_values(series.values(), series.day_index()[0], window_len, hop)
}

/// Short-time spectrum over `values`, whose first sample sits at `first_index`.
///
/// Columns are computed in parallel; each is a pure function of its window so
/// the result matches a sequential pass exactly.
pub fn spectrogram_values(
    values: &[f64],
    first_index: usize,
    window_len: usize,
    hop: usize,
) -> Result<Spectrogram> {
    if hop == 0 {
        return Err(Error::InvalidParameter("hop must be at least 1".into()));
    }
    if window_len < 2 {
        return Err(Error::InvalidParameter(
            "window must hold at least 2 samples".into(),
        ));
    }
    if window_len > values.len() {
        return Err(Error::TooShort {
            needed: window_len,
            got: values.len(),
        });
    }
    let taper = hann(window_len);
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(window_len);
    let starts: Vec<usize> = (0..=values.len() - window_len).step_by(hop).collect();
    let power: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&s| {
            let w = &values[s..s + window_len];
            let mean = w.iter().sum::<f64>() / window_len as f64;
            let tapered = w.iter().zip(&taper).map(|(x, h)| (x - mean) * h);
            one_sided_power(fft.as_ref(), tapered).1
        })
        .collect();
    Ok(Spectrogram {
        window_len,
        hop,
        window_centers: starts
            .iter()
            .map(|s| first_index + s + window_len / 2)
            .collect(),
        frequencies: frequencies(window_len),
        power,
    })
}

/// A run of adjacent spectrogram columns whose total power is anomalous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detection {
    /// Center of the first flagged window.
    pub start_index: usize,
    /// Center of the last flagged window.
    pub end_index: usize,
    /// Center of the strongest flagged window.
    pub peak_index: usize,
    /// Strongest column total divided by the median column total.
    pub peak_ratio: f64,
}

impl Detection {
    pub fn contains(&self, index: usize) -> bool {
        (self.start_index..=self.end_index).contains(&index)
    }

    pub fn overlaps(&self, t1: usize, t2: usize) -> bool {
        self.start_index <= t2 && t1 <= self.end_index
    }
}

/// Flags columns above `threshold ×` the median column total and merges
/// neighbouring flagged columns into one detection.
pub fn detect_discontinuities(spec: &Spectrogram, threshold: f64) -> Result<Vec<Detection>> {
    if !(threshold > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must exceed 1, got {threshold}"
        )));
    }
    if spec.is_empty() {
        return Err(Error::InvalidParameter("empty spectrogram".into()));
    }
    let totals = spec.column_totals();
    let med = median(&totals);
    let mut out: Vec<Detection> = Vec::new();
    let mut prev: Option<usize> = None;
    for (col, &total) in totals.iter().enumerate() {
        // a zero median with positive totals still flags; all-zero flags nothing
        if !(total > threshold * med) {
            continue;
        }
        let center = spec.window_centers[col];
        let ratio = if med > 0.0 {
            total / med
        } else {
            f64::INFINITY
        };
        match (prev, out.last_mut()) {
            (Some(p), Some(last)) if p + 1 == col => {
                last.end_index = center;
                if ratio > last.peak_ratio {
                    last.peak_ratio = ratio;
                    last.peak_index = center;
                }
            }
            _ => out.push(Detection {
                start_index: center,
                end_index: center,
                peak_index: center,
                peak_ratio: ratio,
            }),
        }
        prev = Some(col);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    /// `sin(t/30)`.
    Sine,
    /// `sin(t/30)` plus `dz` for `t > 1000`.
    SineStep { dz: f64 },
    /// `sin(t/30)` plus `sin((t − 60)/5)` for `t > 1000`.
    SinePlusSine,
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    /// Accepts `sine`, `sine_step` (dz = 1.5), `sine_step:<dz>` and `sine_plus_sine`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine" => Ok(Self::Sine),
            "sine_step" => Ok(Self::SineStep { dz: 1.5 }),
            "sine_plus_sine" => Ok(Self::SinePlusSine),
            _ => {
                if let Some(dz) = s.strip_prefix("sine_step:") {
                    let dz = dz
                        .parse()
                        .map_err(|_| Error::InvalidParameter(format!("bad step size `{dz}`")))?;
                    return Ok(Self::SineStep { dz });
                }
                Err(Error::InvalidParameter(format!(
                    "unknown signal kind `{s}`"
                )))
            }
        }
    }
}

pub fn synth_value(kind: SyntheticKind, t: usize) -> f64 {
    let tf = t as f64;
    let base = SYNTH_OFFSET + (tf / 30.0).sin();
    let after = t > SYNTH_BREAK;
    match kind {
        SyntheticKind::Sine => base,
        SyntheticKind::SineStep { dz } => base + if after { dz } else { 0.0 },
        SyntheticKind::SinePlusSine => {
            base + if after {
                ((tf - 60.0) / 5.0).sin()
            } else {
                0.0
            }
        }
    }
}

/// Day 0 for synthetic series.
pub fn synthetic_epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date")
}

/// Consecutive daily dates starting at the synthetic epoch.
pub fn synthetic_dates(n: usize) -> Vec<NaiveDate> {
    let epoch = synthetic_epoch();
    (0..n as u64).map(|t| epoch + Days::new(t)).collect()
}

pub fn synth_signal(kind: SyntheticKind, n: usize) -> Result<PriceSeries> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "signal length must be positive".into(),
        ));
    }
    let label = match kind {
        SyntheticKind::Sine => "sine".to_string(),
        SyntheticKind::SineStep { dz } => format!("sine_step:{dz}"),
        SyntheticKind::SinePlusSine => "sine_plus_sine".to_string(),
    };
    if let SyntheticKind::SineStep { dz } = kind {
        if !(dz.is_finite() && dz > -1.0) {
            return Err(Error::InvalidParameter(format!(
                "step {dz} would make prices non-positive"
            )));
        }
    }
    let values = (0..n).map(|t| synth_value(kind, t)).collect();
    PriceSeries::new(label, synthetic_dates(n), values)
}
