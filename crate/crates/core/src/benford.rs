//! First-significant-digit analysis against Benford's law.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::PriceSeries;

/// Categories minus one.
pub const DEGREES_OF_FREEDOM: usize = 8;

/// Below this many samples the χ² test has little power; reports are flagged.
pub const MIN_SAMPLES: usize = 50;

/// χ² critical value at p = 0.05 with 8 degrees of freedom.
pub const CHI2_CRITICAL_95: f64 = 15.507;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenfordReport {
    pub n_total: usize,
    /// Observed counts for digits 1..=9.
    pub counts: [usize; 9],
    /// Benford proportions for digits 1..=9.
    pub expected: [f64; 9],
    pub excess_pct: [f64; 9],
    pub chi2: f64,
    pub dof: usize,
    #[serde(skip)]
    pub low_power: bool,
}

impl BenfordReport {
    pub fn observed_proportion(&self, digit: u8) -> f64 {
        self.counts[digit as usize - 1] as f64 / self.n_total as f64
    }

    pub fn excess(&self, digit: u8) -> f64 {
        self.excess_pct[digit as usize - 1]
    }

    pub fn conforms_at_95(&self) -> bool {
        self.chi2 < CHI2_CRITICAL_95
    }
}

/// Leading significant decimal digit, independent of scale.
pub fn first_digit(value: f64) -> Result<u8> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::Domain(format!(
            "first digit needs a positive finite value, got {value}"
        )));
    }
    // Scientific formatting gives the exact leading digit without log10 rounding.
    let s = format!("{value:e}");
    Ok(s.as_bytes()[0] - b'0')
}

pub fn benford_expected(digit: u8) -> Result<f64> {
    if !(1..=9).contains(&digit) {
        return Err(Error::Domain(format!("digit {digit} not in 1..=9")));
    }
    Ok((1.0 + 1.0 / digit as f64).log10())
}

/// Digit counts for an arbitrary slice of positive values.
pub fn digit_counts(values: &[f64]) -> Result<[usize; 9]> {
    let mut counts = [0usize; 9];
    for &v in values {
        counts[first_digit(v)? as usize - 1] += 1;
    }
    Ok(counts)
}

/// Pearson χ² test of the counts against Benford proportions.
pub fn report_from_counts(counts: [usize; 9]) -> Result<BenfordReport> {
    let n_total: usize = counts.iter().sum();
    if n_total == 0 {
        return Err(Error::EmptyData);
    }
    let n = n_total as f64;
    let mut expected = [0.0; 9];
    let mut excess_pct = [0.0; 9];
    let mut chi2 = 0.0;
    for d in 0..9 {
        let p = benford_expected(d as u8 + 1)?;
        expected[d] = p;
        let observed = counts[d] as f64;
        let e = n * p;
        chi2 += (observed - e).powi(2) / e;
        excess_pct[d] = 100.0 * (observed / n / p - 1.0);
    }
    Ok(BenfordReport {
        n_total,
        counts,
        expected,
        excess_pct,
        chi2,
        dof: DEGREES_OF_FREEDOM,
        low_power: n_total < MIN_SAMPLES,
    })
}

pub fn benford_test(series: &PriceSeries) -> Result<BenfordReport> {
    benford_test_values(series.values())
}

pub fn benford_test_values(values: &[f64]) -> Result<BenfordReport> {
    if values.is_empty() {
        return Err(Error::EmptyData);
    }
    report_from_counts(digit_counts(values)?)
}

/// Values whose digit counts are `round(n · p_d)`: a sample built to conform.
pub fn exact_benford_sample(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    for d in 1..=9u8 {
        let count = (n as f64 * benford_expected(d).unwrap()).round() as usize;
        for k in 0..count {
            // spread over magnitudes so the sample also spans decades
            let mantissa = d as f64 + 0.5 * (k % 2) as f64;
            out.push(mantissa * 10f64.powi((k % 4) as i32));
        }
    }
    out
}
