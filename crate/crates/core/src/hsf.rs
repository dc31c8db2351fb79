//! Hockey Stick Function: a two-seed additive recurrence placed on a day grid.
//!
//! Knot `k` sits at `anchor + k·dt` (rising) or `anchor − k·dt` (declining)
//! and carries the `k`-th recurrence term. Between knots the curve is
//! log-linear, so each segment is an exponential.
//!
//! Calibration is a brute-force scan over `(dt, p1, growth)` with
//! `p2 = p1·(1 + growth)`. The winner is the candidate with the lowest RMS,
//! ties broken by smallest `dt`, then `p1`, then `p2`, which makes the result
//! independent of evaluation order.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{EventWindow, PriceSeries};

/// Calibration windows shorter than this are rejected.
pub const MIN_CALIBRATION_DAYS: usize = 20;
/// Decline windows may be much shorter than surges.
pub const MIN_DECLINE_DAYS: usize = 5;

/// Default `dt` pitch in days.
pub const DT_PITCH: f64 = 0.5;
/// Default `dt` upper bound in days; longer windows extend it to half their span.
pub const DT_MAX: f64 = 20.0;
pub const P1_POINTS: usize = 40;
pub const P1_LOW: f64 = 0.25;
pub const P1_HIGH: f64 = 2.0;
/// Days averaged to set the `p1` search range.
pub const P_START_DAYS: usize = 5;
pub const GROWTH: [f64; 7] = [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1];
/// Subdivisions per grid pitch in the refinement pass.
pub const REFINE_DIVISIONS: usize = 5;

/// `[p1, p2, p1+p2, ...]`, each term the sum of the previous two.
pub fn generate(p1: f64, p2: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 terms, got {n}"
        )));
    }
    if !(p1 > 0.0 && p2 > 0.0 && p1.is_finite() && p2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "seeds must be positive, got {p1}, {p2}"
        )));
    }
    let mut out = Vec::with_capacity(n);
    out.push(p1);
    out.push(p2);
    for i in 2..n {
        let next = out[i - 1] + out[i - 2];
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Rising,
    Declining,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HsfModel {
    pub p1: f64,
    pub p2: f64,
    pub dt: f64,
    pub anchor_index: usize,
    pub n_knots: usize,
    #[serde(skip)]
    pub direction: Direction,
}

impl HsfModel {
    pub fn new(
        p1: f64,
        p2: f64,
        dt: f64,
        anchor_index: usize,
        n_knots: usize,
        direction: Direction,
    ) -> Result<Self> {
        if !(p1 > 0.0 && p1 <= p2 && p2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "seeds must satisfy 0 < p1 <= p2, got {p1}, {p2}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if n_knots < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 knots, got {n_knots}"
            )));
        }
        Ok(Self {
            p1,
            p2,
            dt,
            anchor_index,
            n_knots,
            direction,
        })
    }

    /// Rising model anchored at `t1` with just enough knots to reach `t2`.
    pub fn covering(p1: f64, p2: f64, dt: f64, t1: usize, t2: usize) -> Result<Self> {
        Self::new(
            p1,
            p2,
            dt,
            t1,
            knots_for_span((t2 - t1) as f64, dt),
            Direction::Rising,
        )
    }

    pub fn knots(&self) -> Vec<f64> {
        generate(self.p1, self.p2, self.n_knots).expect("validated on construction")
    }

    /// Offset of the last knot from the anchor, in days.
    pub fn reach(&self) -> f64 {
        (self.n_knots - 1) as f64 * self.dt
    }

    /// Distance from the anchor in the direction of the recurrence.
    fn offset(&self, t: usize) -> Option<f64> {
        match self.direction {
            Direction::Rising => t.checked_sub(self.anchor_index),
            Direction::Declining => self.anchor_index.checked_sub(t),
        }
        .map(|o| o as f64)
        .filter(|&o| o <= self.reach())
    }

    /// Model value on day `t`; `None` outside the knot span.
    pub fn value_at(&self, t: usize) -> Option<f64> {
        let offset = self.offset(t)?;
        let knots = self.knots();
        Some(interpolate(&knots, offset / self.dt))
    }

    /// Checks that the knot span covers `[t1, t2]`.
    pub fn check_coverage(&self, t1: usize, t2: usize) -> Result<()> {
        match (self.offset(t1), self.offset(t2)) {
            (Some(_), Some(_)) => Ok(()),
            _ => Err(Error::Coverage(format!(
                "{} knots every {} days from day {} do not span [{t1}, {t2}]",
                self.n_knots, self.dt, self.anchor_index
            ))),
        }
    }

    /// Model values at each listed day.
    pub fn evaluate(&self, days: &[usize]) -> Result<Vec<f64>> {
        let knots = self.knots();
        days.iter()
            .map(|&t| {
                self.offset(t)
                    .map(|o| interpolate(&knots, o / self.dt))
                    .ok_or_else(|| {
                        Error::Coverage(format!(
                            "day {t} outside the knot span of a model anchored at {}",
                            self.anchor_index
                        ))
                    })
            })
            .collect()
    }
}

fn knots_for_span(span: f64, dt: f64) -> usize {
    ((span / dt).ceil() as usize + 1).max(2)
}

/// Log-linear interpolation at fractional knot position `pos`.
fn interpolate(knots: &[f64], pos: f64) -> f64 {
    let k = pos.floor() as usize;
    let frac = pos - k as f64;
    if frac == 0.0 || k + 1 >= knots.len() {
        return knots[k.min(knots.len() - 1)];
    }
    let (a, b) = (knots[k].ln(), knots[k + 1].ln());
    (a + frac * (b - a)).exp()
}

/// Daily model values over `[t1, t2]`.
pub fn resample_to_daily(model: &HsfModel, window: &EventWindow) -> Result<Vec<f64>> {
    model.check_coverage(window.t1, window.t2)?;
    let days: Vec<usize> = (window.t1..=window.t2).collect();
    model.evaluate(&days)
}

/// Model values on the samples of `grid`, as a series sharing its dates.
pub fn resample_onto(model: &HsfModel, grid: &PriceSeries) -> Result<PriceSeries> {
    let values = model.evaluate(grid.day_index())?;
    PriceSeries::with_day_index(
        "hsf",
        grid.dates().to_vec(),
        values,
        grid.day_index().to_vec(),
    )
}

/// Root-mean-square distance between observed and modeled prices.
pub fn rms(data: &PriceSeries, model: &PriceSeries) -> Result<f64> {
    if data.day_index() != model.day_index() {
        return Err(Error::Misaligned(format!(
            "{} data samples vs {} model samples on different day grids",
            data.len(),
            model.len()
        )));
    }
    Ok(rms_values(data.values(), model.values()))
}

pub fn rms_values(data: &[f64], model: &[f64]) -> f64 {
    let sse: f64 = data.iter().zip(model).map(|(x, m)| (x - m).powi(2)).sum();
    (sse / data.len() as f64).sqrt()
}

/// RMS deviation about the mean: the score of the best constant model.
pub fn baseline_rms(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Percent improvement of `fit_rms` over the constant-mean baseline.
pub fn rms_reduction(data: &PriceSeries, fit_rms: f64) -> Result<f64> {
    rms_reduction_values(data.values(), fit_rms)
}

pub fn rms_reduction_values(values: &[f64], fit_rms: f64) -> Result<f64> {
    let s = baseline_rms(values);
    if !(s > 0.0) {
        return Err(Error::DegenerateBaseline);
    }
    Ok(100.0 * (1.0 - fit_rms / s))
}

/// Search axes for [`calibrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationGrid {
    pub dt: Vec<f64>,
    pub p1: Vec<f64>,
    /// `p2 = p1 · (1 + growth)`.
    pub growth: Vec<f64>,
    /// Run one refinement pass around the coarse optimum.
    pub refine: bool,
}

impl CalibrationGrid {
    pub fn new(dt: Vec<f64>, p1: Vec<f64>, growth: Vec<f64>) -> Self {
        Self {
            dt,
            p1,
            growth,
            refine: false,
        }
    }

    pub fn with_refinement(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    /// Default axes for a rising window with the given values.
    ///
    /// `p1` spans 40 log-spaced points over `[0.25, 2] ×` the mean of the
    /// first five days; `dt` runs from 0.5 days in 0.5-day steps up to
    /// 20 days or half the window span, whichever is larger.
    pub fn paper_defaults(window_values: &[f64]) -> Self {
        let head = &window_values[..window_values.len().min(P_START_DAYS)];
        let p_start = head.iter().sum::<f64>() / head.len().max(1) as f64;
        let span = window_values.len().saturating_sub(1) as f64;
        let dt_max = DT_MAX.max(span / 2.0);
        let dt_steps = (dt_max / DT_PITCH).floor() as usize;
        let dt = (1..=dt_steps).map(|i| i as f64 * DT_PITCH).collect();
        Self {
            dt,
            p1: log_space(P1_LOW * p_start, P1_HIGH * p_start, P1_POINTS),
            growth: GROWTH.to_vec(),
            refine: true,
        }
    }

    /// Defaults for a decline: the rising defaults of the time-reversed values.
    pub fn decline_defaults(window_values: &[f64]) -> Self {
        let reversed: Vec<f64> = window_values.iter().rev().copied().collect();
        Self::paper_defaults(&reversed)
    }

    /// Every axis subdivided `REFINE_DIVISIONS` times: the exhaustive
    /// counterpart of a coarse-to-fine run.
    pub fn subdivided(&self) -> Self {
        Self {
            dt: subdivide(&self.dt, false),
            p1: subdivide(&self.p1, true),
            growth: subdivide(&self.growth, false),
            refine: false,
        }
    }

    pub fn len(&self) -> usize {
        self.dt.len() * self.p1.len() * self.growth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidParameter("empty calibration grid".into()));
        }
        let ok = self
            .dt
            .iter()
            .chain(&self.p1)
            .all(|v| v.is_finite() && *v > 0.0)
            && self.growth.iter().all(|g| g.is_finite() && *g >= 0.0);
        if !ok {
            return Err(Error::InvalidParameter(
                "grid needs dt > 0, p1 > 0 and growth >= 0".into(),
            ));
        }
        Ok(())
    }
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Points between `a` and `b` at 1/REFINE_DIVISIONS pitch, endpoints included.
fn between(a: f64, b: f64, geometric: bool) -> impl Iterator<Item = f64> {
    let d = if a == b { 0 } else { REFINE_DIVISIONS };
    (0..=d).map(move |j| {
        if j == 0 {
            a
        } else if j == REFINE_DIVISIONS {
            b
        } else {
            let f = j as f64 / d as f64;
            if geometric {
                (a.ln() + f * (b.ln() - a.ln())).exp()
            } else {
                a + f * (b - a)
            }
        }
    })
}

fn subdivide(axis: &[f64], geometric: bool) -> Vec<f64> {
    let axis = sorted_unique(axis.to_vec());
    let mut out = vec![axis[0]];
    for w in axis.windows(2) {
        out.extend(between(w[0], w[1], geometric).skip(1));
    }
    sorted_unique(out)
}

/// Fine points around `center` reaching to its neighbours on `axis`.
fn refine_axis(axis: &[f64], center: f64, geometric: bool) -> Vec<f64> {
    let axis = sorted_unique(axis.to_vec());
    let i = axis.partition_point(|v| *v < center);
    let lo = if i > 0 { axis[i - 1] } else { center };
    let hi = axis.get(i + 1).copied().unwrap_or(center);
    let mut out: Vec<f64> = between(lo, center, geometric).collect();
    out.extend(between(center, hi, geometric));
    sorted_unique(out)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    rms: f64,
    dt: f64,
    p1: f64,
    p2: f64,
    growth: f64,
}

impl Candidate {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.rms
            .total_cmp(&other.rms)
            .then(self.dt.total_cmp(&other.dt))
            .then(self.p1.total_cmp(&other.p1))
            .then(self.p2.total_cmp(&other.p2))
    }

    fn better(a: Self, b: Self) -> Self {
        if b.cmp_key(&a) == Ordering::Less {
            b
        } else {
            a
        }
    }
}

/// Values to fit, ordered along the recurrence, with their knot offsets.
struct Frame<'a> {
    values: &'a [f64],
    offsets: Vec<f64>,
    span: f64,
}

/// Unit-seed knot shape `generate(1, 1+g)` sampled at each offset.
fn shape(offsets: &[f64], dt: f64, growth: f64, span: f64) -> Vec<f64> {
    let knots = generate(1.0, 1.0 + growth, knots_for_span(span, dt)).expect("n >= 2");
    offsets
        .iter()
        .map(|&o| interpolate(&knots, o / dt))
        .collect()
}

fn scan(frame: &Frame<'_>, dts: &[f64], p1s: &[f64], growths: &[f64]) -> Option<Candidate> {
    let pairs: Vec<(f64, f64)> = dts
        .iter()
        .flat_map(|&dt| growths.iter().map(move |&g| (dt, g)))
        .collect();
    pairs
        .par_iter()
        .filter_map(|&(dt, growth)| {
            let unit = shape(&frame.offsets, dt, growth, frame.span);
            p1s.iter()
                .map(|&p1| {
                    let sse: f64 = frame
                        .values
                        .iter()
                        .zip(&unit)
                        .map(|(x, u)| (x - p1 * u).powi(2))
                        .sum();
                    let rms = (sse / frame.values.len() as f64).sqrt();
                    Candidate {
                        rms: if rms.is_finite() { rms } else { f64::INFINITY },
                        dt,
                        p1,
                        p2: p1 * (1.0 + growth),
                        growth,
                    }
                })
                .reduce(Candidate::better)
        })
        .reduce_with(Candidate::better)
}

fn search(frame: &Frame<'_>, grid: &CalibrationGrid) -> Result<Candidate> {
    grid.validate()?;
    let coarse = scan(frame, &grid.dt, &grid.p1, &grid.growth)
        .ok_or_else(|| Error::InvalidParameter("empty calibration grid".into()))?;
    let best = if grid.refine {
        let dt = refine_axis(&grid.dt, coarse.dt, false);
        let p1 = refine_axis(&grid.p1, coarse.p1, true);
        let growth = refine_axis(&grid.growth, coarse.growth, false);
        match scan(frame, &dt, &p1, &growth) {
            Some(fine) => Candidate::better(coarse, fine),
            None => coarse,
        }
    } else {
        coarse
    };
    if !best.rms.is_finite() {
        return Err(Error::Coverage(
            "every candidate overflows over the window".into(),
        ));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: HsfModel,
    pub modeled: PriceSeries,
    /// Observed minus modeled, in forward time order.
    pub residuals: Vec<f64>,
    pub rms: f64,
    pub rms_reduction_pct: f64,
    pub window: EventWindow,
}

impl FitResult {
    /// Fit RMS as a fraction of the constant-mean baseline RMS.
    pub fn relative_rms(&self) -> f64 {
        1.0 - self.rms_reduction_pct / 100.0
    }

    /// Largest modeled value over the window.
    pub fn modeled_peak(&self) -> f64 {
        self.modeled
            .values()
            .iter()
            .copied()
            .fold(f64::MIN, f64::max)
    }
}

/// Brute-force fit of a rising HSF anchored at the window start.
pub fn calibrate(
    data: &PriceSeries,
    window: &EventWindow,
    grid: &CalibrationGrid,
) -> Result<FitResult> {
    let w = data.index_range(window.t1, window.t2)?;
    if w.len() < MIN_CALIBRATION_DAYS {
        return Err(Error::TooShort {
            needed: MIN_CALIBRATION_DAYS,
            got: w.len(),
        });
    }
    fit_frame(&w, window, grid, Direction::Rising)
}

/// Fits a falling window by calibrating a rising HSF on its time reversal.
pub fn fit_decline(
    data: &PriceSeries,
    window: &EventWindow,
    grid: &CalibrationGrid,
) -> Result<FitResult> {
    let w = data.index_range(window.t1, window.t2)?;
    if w.len() < MIN_DECLINE_DAYS {
        return Err(Error::TooShort {
            needed: MIN_DECLINE_DAYS,
            got: w.len(),
        });
    }
    let v = w.values();
    if !(v[v.len() - 1] < v[0]) {
        return Err(Error::Direction(format!(
            "window {}..{} ends at {} which is not below its start {}",
            w.first_date(),
            w.last_date(),
            v[v.len() - 1],
            v[0]
        )));
    }
    fit_frame(&w, window, grid, Direction::Declining)
}

fn fit_frame(
    w: &PriceSeries,
    window: &EventWindow,
    grid: &CalibrationGrid,
    direction: Direction,
) -> Result<FitResult> {
    let (t1, t2) = (window.t1, window.t2);
    // frame order runs along the recurrence: forward for rises, backward for declines
    let (values, anchor): (Vec<f64>, usize) = match direction {
        Direction::Rising => (w.values().to_vec(), t1),
        Direction::Declining => (w.values().iter().rev().copied().collect(), t2),
    };
    let offsets: Vec<f64> = match direction {
        Direction::Rising => w.day_index().iter().map(|&t| (t - t1) as f64).collect(),
        Direction::Declining => w
            .day_index()
            .iter()
            .rev()
            .map(|&t| (t2 - t) as f64)
            .collect(),
    };
    let span = (t2 - t1) as f64;
    let frame = Frame {
        values: &values,
        offsets,
        span,
    };
    let best = search(&frame, grid)?;
    let model = HsfModel::new(
        best.p1,
        best.p2,
        best.dt,
        anchor,
        knots_for_span(span, best.dt),
        direction,
    )?;
    let modeled = resample_onto(&model, w)?;
    let mut frame_model = modeled.values().to_vec();
    if direction == Direction::Declining {
        frame_model.reverse();
    }
    let rms = rms_values(&values, &frame_model);
    let rms_reduction_pct = rms_reduction_values(&values, rms)?;
    let residuals = w
        .values()
        .iter()
        .zip(modeled.values())
        .map(|(x, m)| x - m)
        .collect();
    Ok(FitResult {
        model,
        modeled,
        residuals,
        rms,
        rms_reduction_pct,
        window: *window,
    })
}
