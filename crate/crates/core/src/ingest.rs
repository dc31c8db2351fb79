//! Daily price series: CSV ingestion, date windows and per-window statistics.
//!
//! A [`PriceSeries`] counts samples, not calendar days. Exchange holidays are
//! never filled in, so `day_index` is the sample offset from the first row of
//! the full dataset and slices keep their parent's offsets.

use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Column used when the caller does not ask for another one.
pub const DEFAULT_PRICE_COLUMN: &str = "Open";

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    label: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    day_index: Vec<usize>,
}

impl PriceSeries {
    /// Builds a full dataset; `day_index` starts at 0.
    pub fn new(label: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        let day_index = (0..values.len()).collect();
        Self::with_day_index(label, dates, values, day_index)
    }

    pub fn with_day_index(
        label: impl Into<String>,
        dates: Vec<NaiveDate>,
        values: Vec<f64>,
        day_index: Vec<usize>,
    ) -> Result<Self> {
        if dates.len() != values.len() || day_index.len() != values.len() {
            return Err(Error::LengthMismatch {
                dates: dates.len(),
                values: values.len(),
            });
        }
        if values.is_empty() {
            return Err(Error::EmptyData);
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::UnorderedDates(w[1]));
            }
        }
        if day_index.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "day_index must be strictly increasing".into(),
            ));
        }
        if let Some((d, v)) = dates
            .iter()
            .zip(&values)
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::NonPositive {
                date: *d,
                value: *v,
            });
        }
        Ok(Self {
            label: label.into(),
            dates,
            values,
            day_index,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn day_index(&self) -> &[usize] {
        &self.day_index
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last_date(&self) -> NaiveDate {
        self.dates[self.dates.len() - 1]
    }

    /// Position of a day index inside this series.
    pub fn position(&self, index: usize) -> Option<usize> {
        self.day_index.binary_search(&index).ok()
    }

    fn bounds_error(&self, index: usize) -> Error {
        Error::OutOfBounds {
            index,
            first: self.day_index[0],
            last: self.day_index[self.len() - 1],
        }
    }

    /// Samples whose day index lies in `[t1, t2]`.
    pub fn index_range(&self, t1: usize, t2: usize) -> Result<PriceSeries> {
        let a = self.position(t1).ok_or_else(|| self.bounds_error(t1))?;
        let b = self.position(t2).ok_or_else(|| self.bounds_error(t2))?;
        if b < a {
            return Err(Error::InvalidParameter(format!("t1 {t1} is after t2 {t2}")));
        }
        Ok(self.sub(a, b + 1))
    }

    /// The last `n` samples (or all of them when shorter).
    pub fn tail(&self, n: usize) -> PriceSeries {
        self.sub(self.len().saturating_sub(n), self.len())
    }

    fn sub(&self, a: usize, b: usize) -> PriceSeries {
        PriceSeries {
            label: self.label.clone(),
            dates: self.dates[a..b].to_vec(),
            values: self.values[a..b].to_vec(),
            day_index: self.day_index[a..b].to_vec(),
        }
    }
}

/// Result of reading a CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvImport {
    pub series: PriceSeries,
    /// Rows skipped because the price cell was empty or `null`.
    pub dropped_rows: usize,
}

/// Reads a Yahoo-style CSV export (`Date,Open,High,...`).
///
/// The date column is matched case-insensitively so that files written by
/// [`write_series_csv`] read back. Empty and `null` price cells are dropped
/// and counted; any other unparseable cell is an error.
pub fn parse_price_csv(raw: &[u8], column: &str) -> Result<CsvImport> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(raw);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .or_else(|| headers.iter().position(|h| h.eq_ignore_ascii_case(name)))
    };
    let schema_err = |missing: &str| Error::Schema {
        missing: missing.to_owned(),
        available: headers.clone(),
    };
    let date_col = find("Date").ok_or_else(|| schema_err("Date"))?;
    let price_col = find(column).ok_or_else(|| schema_err(column))?;

    let mut rows = Vec::new();
    let mut dropped_rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        // header is line 1
        let row = i + 2;
        let date_text = record.get(date_col).unwrap_or("");
        let date =
            NaiveDate::parse_from_str(date_text, DATE_FORMAT).map_err(|_| Error::InvalidDate {
                row,
                text: date_text.to_owned(),
            })?;
        let cell = record.get(price_col).unwrap_or("");
        if cell.is_empty() || cell.eq_ignore_ascii_case("null") {
            dropped_rows += 1;
            continue;
        }
        let value: f64 = cell.parse().map_err(|_| Error::InvalidPrice {
            row,
            text: cell.to_owned(),
        })?;
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidPrice {
                row,
                text: cell.to_owned(),
            });
        }
        rows.push((date, value));
    }
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate(w[0].0));
    }
    let (dates, values) = rows.into_iter().unzip();
    Ok(CsvImport {
        series: PriceSeries::new(column, dates, values)?,
        dropped_rows,
    })
}

/// Writes `date,value` rows at full precision.
pub fn write_series_csv<W: Write>(series: &PriceSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "value"])?;
    for (d, v) in series.dates.iter().zip(&series.values) {
        w.write_record([d.format(DATE_FORMAT).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Inclusive date-range restriction. Day indices are preserved.
pub fn slice(series: &PriceSeries, from: NaiveDate, to: NaiveDate) -> Result<PriceSeries> {
    if from > to {
        return Err(Error::InvalidParameter(format!("{from} is after {to}")));
    }
    let a = series.dates.partition_point(|d| *d < from);
    let b = series.dates.partition_point(|d| *d <= to);
    if a >= b {
        return Err(Error::EmptyWindow { from, to });
    }
    Ok(series.sub(a, b))
}

/// One episode window: day-index range plus the price extremes inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventWindow {
    pub t1: usize,
    pub t2: usize,
    pub date1: NaiveDate,
    pub date2: NaiveDate,
    pub p_min: f64,
    pub p_max: f64,
}

impl EventWindow {
    pub fn price_change(&self) -> f64 {
        self.p_max - self.p_min
    }

    /// Inclusive sample count, assuming a contiguous index range.
    pub fn days(&self) -> usize {
        self.t2 - self.t1 + 1
    }
}

pub fn window_stats(series: &PriceSeries, t1: usize, t2: usize) -> Result<EventWindow> {
    if t1 >= t2 {
        return Err(Error::InvalidParameter(format!(
            "window start {t1} must precede end {t2}"
        )));
    }
    let w = series.index_range(t1, t2)?;
    let (p_min, p_max) = w
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if p_min >= p_max {
        return Err(Error::DegenerateWindow(format!(
            "constant price {p_min} over [{t1}, {t2}]"
        )));
    }
    Ok(EventWindow {
        t1,
        t2,
        date1: w.first_date(),
        date2: w.last_date(),
        p_min,
        p_max,
    })
}

/// Window covering every sample of `series`.
pub fn full_window(series: &PriceSeries) -> Result<EventWindow> {
    let idx = series.day_index();
    window_stats(series, idx[0], idx[idx.len() - 1])
}
