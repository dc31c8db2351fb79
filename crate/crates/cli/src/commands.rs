use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use hsfkit_core::benford::{self, BenfordReport};
use hsfkit_core::events::{self, average_curve, decline_episodes, normalize, NormalizedEvent};
use hsfkit_core::hsf::{self, CalibrationGrid, FitResult, HsfModel, DT_PITCH, MIN_DECLINE_DAYS};
use hsfkit_core::ingest::{
    self, full_window, parse_price_csv, EventWindow, PriceSeries, DATE_FORMAT,
};
use hsfkit_core::spectral::{self, synthetic_dates, SyntheticKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::args::{
    BenfordArgs, Common, CorrelateArgs, EventArgs, EventSelector, FitArgs, OverlayArgs,
    SpectrumArgs,
};
use crate::output::{field, OutputDir};
use crate::CliError;

/// Length of the `--synthetic hsf` episode, in days.
const SYNTH_HSF_DAYS: usize = 90;
/// Relative noise of the `--synthetic hsf` episode.
const SYNTH_HSF_NOISE: f64 = 0.01;
const SYNTH_BENFORD_SAMPLES: usize = 10_000;
/// Shared-date window for `correlate` when `--days` is absent.
const DEFAULT_CORRELATION_DAYS: usize = 180;

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn fmt_date(d: NaiveDate) -> String {
    d.format(DATE_FORMAT).to_string()
}

fn read_csv(path: &Path, column: &str) -> Result<PriceSeries, CliError> {
    let raw = fs::read(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    let import =
        parse_price_csv(&raw, column).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    if import.dropped_rows > 0 {
        eprintln!(
            "hsfkit: {}: dropped {} rows with missing `{column}` values",
            path.display(),
            import.dropped_rows
        );
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| column.to_string());
    Ok(import.series.with_label(label))
}

fn synthetic(kind: &str, common: &Common) -> Result<PriceSeries, CliError> {
    match kind {
        "benford" => {
            let values = benford::exact_benford_sample(SYNTH_BENFORD_SAMPLES);
            Ok(PriceSeries::new(
                "benford",
                synthetic_dates(values.len()),
                values,
            )?)
        }
        "hsf" => {
            let model = HsfModel::covering(200.0, 210.0, 5.0, 0, SYNTH_HSF_DAYS - 1)?;
            let days: Vec<usize> = (0..SYNTH_HSF_DAYS).collect();
            let clean = model.evaluate(&days)?;
            let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
            let noise = Normal::new(0.0, SYNTH_HSF_NOISE).expect("valid sigma");
            let values = clean
                .iter()
                .map(|v| v * (1.0 + noise.sample(&mut rng)))
                .collect();
            Ok(PriceSeries::new(
                "hsf",
                synthetic_dates(SYNTH_HSF_DAYS),
                values,
            )?)
        }
        other => {
            let kind: SyntheticKind = other.parse()?;
            Ok(spectral::synth_signal(kind, common.length)?)
        }
    }
}

/// Applies `--from`, `--to` and (optionally) `--days`.
fn restrict(
    series: PriceSeries,
    common: &Common,
    apply_days: bool,
) -> Result<PriceSeries, CliError> {
    let from = common.from.unwrap_or(series.first_date());
    let to = common.to.unwrap_or(series.last_date());
    let mut s = ingest::slice(&series, from, to)?;
    if apply_days {
        if let Some(n) = common.days {
            if n == 0 {
                return Err(input_err("--days must be positive"));
            }
            let idx = s.day_index();
            let last = idx[n.min(idx.len()) - 1];
            s = s.index_range(idx[0], last)?;
        }
    }
    Ok(s)
}

fn load_all(common: &Common, apply_days: bool) -> Result<Vec<PriceSeries>, CliError> {
    let mut out = Vec::new();
    if let Some(kind) = &common.synthetic {
        out.push(synthetic(kind, common)?);
    }
    for path in &common.inputs {
        out.push(read_csv(path, &common.column)?);
    }
    if out.is_empty() {
        return Err(input_err("no input: pass --input PATH or --synthetic KIND"));
    }
    out.into_iter()
        .map(|s| restrict(s, common, apply_days))
        .collect()
}

fn load_one(common: &Common) -> Result<PriceSeries, CliError> {
    let mut all = load_all(common, true)?;
    if all.len() > 1 {
        return Err(input_err("this command takes a single input"));
    }
    Ok(all.remove(0))
}

fn date_of(series: &PriceSeries, index: usize) -> Option<String> {
    series.position(index).map(|p| fmt_date(series.dates()[p]))
}

#[derive(Serialize)]
struct DetectionJson {
    start_index: usize,
    end_index: usize,
    peak_index: usize,
    peak_ratio: f64,
    start_date: Option<String>,
    end_date: Option<String>,
}

#[derive(Serialize)]
struct DetectionsJson {
    label: String,
    samples: usize,
    window_len: usize,
    hop: usize,
    threshold: f64,
    detections: Vec<DetectionJson>,
}

pub fn spectrum(args: &SpectrumArgs) -> Result<(), CliError> {
    let series = load_one(&args.common)?;
    let periodogram = spectral::periodogram(&series)?;
    let sgram = spectral::spectrogram(&series, args.window, args.hop)?;
    let found = spectral::detect_discontinuities(&sgram, args.threshold)?;

    let out = OutputDir::create(&args.common.output_dir)?;
    out.csv(
        "periodogram.csv",
        "frequency,power",
        periodogram
            .frequencies
            .iter()
            .zip(&periodogram.power)
            .map(|(f, p)| format!("{f},{p}")),
    )?;
    out.csv(
        "spectrogram.csv",
        "center_index,frequency,power",
        sgram
            .window_centers
            .iter()
            .zip(&sgram.power)
            .flat_map(|(c, col)| {
                sgram
                    .frequencies
                    .iter()
                    .zip(col)
                    .map(move |(f, p)| format!("{c},{f},{p}"))
            }),
    )?;
    out.json(
        "detections.json",
        &DetectionsJson {
            label: series.label().to_string(),
            samples: series.len(),
            window_len: sgram.window_len,
            hop: sgram.hop,
            threshold: args.threshold,
            detections: found
                .iter()
                .map(|d| DetectionJson {
                    start_index: d.start_index,
                    end_index: d.end_index,
                    peak_index: d.peak_index,
                    peak_ratio: d.peak_ratio,
                    start_date: date_of(&series, d.start_index),
                    end_date: date_of(&series, d.end_index),
                })
                .collect(),
        },
    )
}

pub fn benford(args: &BenfordArgs) -> Result<(), CliError> {
    let series = load_one(&args.common)?;
    let report: BenfordReport = benford::benford_test(&series)?;
    if report.low_power {
        eprintln!(
            "hsfkit: only {} samples; the chi-square test has low power below {}",
            report.n_total,
            benford::MIN_SAMPLES
        );
    }
    let out = OutputDir::create(&args.common.output_dir)?;
    out.json("benford.json", &report)?;
    out.csv(
        "benford.csv",
        "digit,observed_prop,expected_prop",
        (1..=9u8).map(|d| {
            format!(
                "{d},{},{}",
                report.observed_proportion(d),
                report.expected[d as usize - 1]
            )
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
enum EventId {
    Catalog(u32),
    Named(String),
}

impl std::fmt::Display for EventId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EventId::Catalog(n) => write!(f, "{n}"),
            EventId::Named(s) => f.write_str(s),
        }
    }
}

struct Target {
    id: EventId,
    window: Result<EventWindow, CliError>,
    published: Option<&'static events::CatalogEntry>,
}

fn catalog_selection(select: &EventArgs) -> Result<Vec<&'static events::CatalogEntry>, CliError> {
    let mut ids: Vec<u32> = Vec::new();
    for sel in &select.events {
        match sel {
            EventSelector::All => ids.extend(events::catalog().iter().map(|e| e.event)),
            EventSelector::One(n) => ids.push(*n),
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    ids.retain(|id| seen.insert(*id));
    ids.into_iter()
        .map(|id| events::catalog_entry(id).map_err(CliError::from))
        .collect()
}

fn explicit_window(
    series: &PriceSeries,
    select: &EventArgs,
) -> Option<Result<EventWindow, CliError>> {
    match (select.t1, select.t2) {
        (Some(t1), Some(t2)) => Some(ingest::window_stats(series, t1, t2).map_err(CliError::from)),
        _ => None,
    }
}

fn fit_targets(args: &FitArgs, series: &PriceSeries) -> Result<Vec<Target>, CliError> {
    let catalog = catalog_selection(&args.select)?;
    let explicit = explicit_window(series, &args.select);
    if args.decline {
        if !catalog.is_empty() {
            return Err(input_err(
                "--decline works on --t1/--t2 or --from/--to ranges, not catalog events",
            ));
        }
        let windows = match explicit {
            Some(w) => vec![w?],
            None => decline_episodes(series, args.min_drop, MIN_DECLINE_DAYS)?,
        };
        if windows.is_empty() {
            return Err(input_err(format!(
                "no decline of at least {:.0}% over {MIN_DECLINE_DAYS}+ days in range",
                args.min_drop * 100.0
            )));
        }
        return Ok(windows
            .into_iter()
            .enumerate()
            .map(|(i, w)| Target {
                id: EventId::Named(format!("decline_{}", i + 1)),
                window: Ok(w),
                published: None,
            })
            .collect());
    }
    let mut targets: Vec<Target> = catalog
        .into_iter()
        .map(|e| Target {
            id: EventId::Catalog(e.event),
            window: e.resolve(series).map_err(CliError::from),
            published: Some(e),
        })
        .collect();
    if let Some(w) = explicit {
        targets.push(Target {
            id: EventId::Named("custom".into()),
            window: w,
            published: None,
        });
    }
    if targets.is_empty() {
        if args.common.synthetic.is_some() {
            targets.push(Target {
                id: EventId::Named("synthetic".into()),
                window: full_window(series).map_err(CliError::from),
                published: None,
            });
        } else {
            return Err(input_err("select events with --event N|all or --t1/--t2"));
        }
    }
    Ok(targets)
}

fn grid_for(args: &FitArgs, values: &[f64]) -> Result<CalibrationGrid, CliError> {
    let mut grid = if args.decline {
        CalibrationGrid::decline_defaults(values)
    } else {
        CalibrationGrid::paper_defaults(values)
    };
    if let Some(dt_max) = args.dt_max {
        if dt_max.is_nan() || dt_max < DT_PITCH {
            return Err(input_err(format!("--dt-max must be at least {DT_PITCH}")));
        }
        let steps = (dt_max / DT_PITCH).floor() as usize;
        grid.dt = (1..=steps).map(|i| i as f64 * DT_PITCH).collect();
    }
    if args.no_refine {
        grid.refine = false;
    }
    Ok(grid)
}

#[derive(Serialize)]
struct FitJson<'a> {
    event_id: &'a EventId,
    p1: f64,
    p2: f64,
    dt: f64,
    anchor_index: usize,
    n_knots: usize,
    rms_usd: f64,
    rms_reduction_pct: f64,
    window: &'a EventWindow,
}

fn run_fit(
    args: &FitArgs,
    series: &PriceSeries,
    window: &EventWindow,
) -> Result<FitResult, CliError> {
    let values = series.index_range(window.t1, window.t2)?;
    let grid = grid_for(args, values.values())?;
    let fit = if args.decline {
        hsf::fit_decline(series, window, &grid)?
    } else {
        hsf::calibrate(series, window, &grid)?
    };
    Ok(fit)
}

fn write_fit(
    out: &OutputDir,
    id: &EventId,
    fit: &FitResult,
    series: &PriceSeries,
) -> Result<(), CliError> {
    let m = &fit.model;
    out.json(
        &format!("fit_{id}.json"),
        &FitJson {
            event_id: id,
            p1: m.p1,
            p2: m.p2,
            dt: m.dt,
            anchor_index: m.anchor_index,
            n_knots: m.n_knots,
            rms_usd: fit.rms,
            rms_reduction_pct: fit.rms_reduction_pct,
            window: &fit.window,
        },
    )?;
    let observed = series.index_range(fit.window.t1, fit.window.t2)?;
    out.csv(
        &format!("curve_{id}.csv"),
        "date,observed,modeled,residual",
        observed
            .dates()
            .iter()
            .zip(observed.values())
            .zip(fit.modeled.values().iter().zip(&fit.residuals))
            .map(|((d, x), (m, r))| format!("{},{x},{m},{r}", fmt_date(*d))),
    )
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let series = load_one(&args.common)?;
    let targets = fit_targets(args, &series)?;
    let out = OutputDir::create(&args.common.output_dir)?;
    let mut rows = Vec::new();
    let mut successes = 0;
    for target in &targets {
        let result = target
            .window
            .as_ref()
            .map_err(|e| input_err(e.to_string()))
            .and_then(|w| run_fit(args, &series, w).map(|f| (*w, f)));
        let (published_rms, published_red) = target
            .published
            .map(|e| (e.rms.to_string(), e.rms_red.to_string()))
            .unwrap_or_default();
        match result {
            Ok((w, f)) => {
                write_fit(&out, &target.id, &f, &series)?;
                successes += 1;
                rows.push(format!(
                    "{},{},{},{},{},{},{},{},{},{},{published_rms},{published_red},ok",
                    target.id,
                    w.t1,
                    w.t2,
                    fmt_date(w.date1),
                    fmt_date(w.date2),
                    w.p_min,
                    w.p_max,
                    w.price_change(),
                    f.rms,
                    f.rms_reduction_pct
                ));
            }
            Err(e) => {
                eprintln!("hsfkit: event {}: {e}", target.id);
                rows.push(format!(
                    "{},,,,,,,,,,{published_rms},{published_red},{}",
                    target.id,
                    field(&format!("failed: {e}"))
                ));
            }
        }
    }
    out.csv(
        "summary.csv",
        "event,t1,t2,date1,date2,p_min,p_max,price_change,rms,rms_red,published_rms,published_rms_red,status",
        rows,
    )?;
    if successes == 0 {
        return Err(input_err("no event could be fitted"));
    }
    Ok(())
}

pub fn overlay(args: &OverlayArgs) -> Result<(), CliError> {
    let inputs = load_all(&args.common, true)?;
    let catalog = catalog_selection(&args.select)?;
    let mut traces: Vec<(String, NormalizedEvent)> = Vec::new();
    if !catalog.is_empty() || args.select.t1.is_some() {
        let series = &inputs[0];
        for e in catalog {
            let w = e.resolve(series)?;
            let mut n = normalize(series, &w)?;
            n.event_id = Some(e.event);
            traces.push((e.event.to_string(), n));
        }
        if let Some(w) = explicit_window(series, &args.select) {
            traces.push(("custom".into(), normalize(series, &w?)?));
        }
    } else {
        for s in &inputs {
            traces.push((s.label().to_string(), normalize(s, &full_window(s)?)?));
        }
    }
    let normalized: Vec<NormalizedEvent> = traces.iter().map(|(_, n)| n.clone()).collect();
    let avg = average_curve(&normalized, args.grid_points)?;

    let out = OutputDir::create(&args.common.output_dir)?;
    out.csv(
        "overlay.csv",
        "event_id,tau,nu",
        traces.iter().flat_map(|(id, n)| {
            let id = field(id);
            n.tau
                .iter()
                .zip(&n.nu)
                .map(move |(t, v)| format!("{id},{t},{v}"))
        }),
    )?;
    out.csv(
        "average_curve.csv",
        "tau,mean,std",
        avg.iter()
            .map(|p| format!("{},{},{}", p.tau, p.mean, p.std)),
    )
}

#[derive(Serialize)]
struct CorrelationJson {
    series_a: String,
    series_b: String,
    r2: f64,
    n: usize,
    first_date: String,
    last_date: String,
}

pub fn correlate(args: &CorrelateArgs) -> Result<(), CliError> {
    let inputs = load_all(&args.common, false)?;
    let [a, b] = inputs.as_slice() else {
        return Err(input_err(format!(
            "correlate needs exactly two inputs, got {}",
            inputs.len()
        )));
    };
    let days = args.common.days.unwrap_or(DEFAULT_CORRELATION_DAYS);
    let c = events::correlate_recent(a, b, days)?;
    let out = OutputDir::create(&args.common.output_dir)?;
    out.json(
        "correlation.json",
        &CorrelationJson {
            series_a: a.label().to_string(),
            series_b: b.label().to_string(),
            r2: c.r2,
            n: c.n,
            first_date: fmt_date(c.first_date),
            last_date: fmt_date(c.last_date),
        },
    )
}
