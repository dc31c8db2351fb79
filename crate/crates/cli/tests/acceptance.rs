//! Acceptance gate. Prints one line per criterion and exits non-zero if any
//! criterion fails. Criteria that need real BTC prices read the Yahoo export
//! named by `HSFKIT_BTC_CSV` and report BLOCKED when it is not set.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use hsfkit_core::benford::benford_test;
use hsfkit_core::events::{average_curve, catalog, correlate, curve_at, normalize};
use hsfkit_core::hsf::{
    baseline_rms, calibrate, fit_decline, generate, rms_values, CalibrationGrid, HsfModel,
};
use hsfkit_core::ingest::{full_window, parse_price_csv, slice, window_stats, PriceSeries};
use hsfkit_core::spectral::{
    periodogram, periodogram_values, synth_signal, synthetic_dates, SyntheticKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BTC_ENV: &str = "HSFKIT_BTC_CSV";

type Criterion = (&'static str, fn() -> Verdict);

enum Verdict {
    Pass(String),
    Fail(String),
    Blocked(String),
}

use Verdict::*;

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn btc_path() -> Option<PathBuf> {
    std::env::var_os(BTC_ENV).map(PathBuf::from)
}

fn load_btc(path: &Path) -> Result<PriceSeries, String> {
    let raw = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_price_csv(&raw, "Open")
        .map(|i| i.series)
        .map_err(|e| e.to_string())
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn blocked() -> Verdict {
    Blocked(format!("set {BTC_ENV} to a daily BTC-USD Yahoo export"))
}

fn benford_reproduction() -> Verdict {
    let Some(path) = btc_path() else {
        return blocked();
    };
    let start = Instant::now();
    let series = match load_btc(&path)
        .and_then(|s| slice(&s, ymd(2010, 8, 17), ymd(2021, 6, 27)).map_err(|e| e.to_string()))
    {
        Ok(s) => s,
        Err(e) => return Fail(e),
    };
    let report = match benford_test(&series) {
        Ok(r) => r,
        Err(e) => return Fail(e.to_string()),
    };
    let elapsed = start.elapsed();
    let six = report.excess(6);
    verdict(
        (300.0..=420.0).contains(&report.chi2)
            && report.dof == 8
            && (35.0..=65.0).contains(&six)
            && elapsed < Duration::from_secs(1),
        format!(
            "n={} chi2={:.1} dof={} digit6 excess={six:+.1}% in {elapsed:.2?}",
            report.n_total, report.chi2, report.dof
        ),
    )
}

fn catalog_fit_quality() -> Verdict {
    let Some(path) = btc_path() else {
        return blocked();
    };
    let out = tempfile::TempDir::new().unwrap();
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_hsfkit"))
        .args(["fit", "--events", "all", "--paper-defaults", "--input"])
        .arg(&path)
        .arg("--output-dir")
        .arg(out.path())
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    if status.status.code() != Some(0) {
        return Fail(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    let summary = fs::read_to_string(out.path().join("summary.csv")).unwrap();
    let mut good = 0;
    let mut worst_rel = 0.0f64;
    let mut rows = 0;
    for line in summary.lines().skip(1) {
        rows += 1;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.last() != Some(&"ok") {
            continue;
        }
        let red: f64 = cols[9].parse().unwrap();
        worst_rel = worst_rel.max(1.0 - red / 100.0);
        if red >= 70.0 {
            good += 1;
        }
    }
    verdict(
        rows == 14 && good >= 12 && worst_rel <= 0.30 && elapsed < Duration::from_secs(300),
        format!(
            "{good}/14 events with rms_red >= 70%, worst relative rms {:.1}% in {elapsed:.1?}",
            worst_rel * 100.0
        ),
    )
}

fn event10_parameters() -> Verdict {
    let Some(path) = btc_path() else {
        return blocked();
    };
    let run = || -> Result<Verdict, String> {
        let series = load_btc(&path)?;
        let entry = catalog().iter().find(|e| e.event == 10).unwrap();
        let window = entry.resolve(&series).map_err(|e| e.to_string())?;
        let values = series
            .index_range(window.t1, window.t2)
            .map_err(|e| e.to_string())?;
        let grid = CalibrationGrid::paper_defaults(values.values());
        let fit = calibrate(&series, &window, &grid).map_err(|e| e.to_string())?;
        let peak = fit.modeled_peak();
        let dev = peak / window.p_max - 1.0;
        Ok(verdict(
            (350.0..=700.0).contains(&fit.model.p1) && dev.abs() <= 0.25,
            format!(
                "p1={:.1} p2={:.1} dt={} modeled peak {peak:.0} vs observed {:.0} ({:+.1}%)",
                fit.model.p1,
                fit.model.p2,
                fit.model.dt,
                window.p_max,
                dev * 100.0
            ),
        ))
    };
    run().unwrap_or_else(Fail)
}

fn off_peak_total(power: &[f64], peak: usize) -> f64 {
    power
        .iter()
        .enumerate()
        .filter(|(i, _)| i.abs_diff(peak) > 1)
        .map(|(_, v)| v)
        .sum()
}

fn spectral_controls() -> Verdict {
    let n = 2048;
    let start = Instant::now();
    let sine = periodogram(&synth_signal(SyntheticKind::Sine, n).unwrap()).unwrap();
    let peak = sine.peak();
    let target = 1.0 / (60.0 * std::f64::consts::PI);
    let bin_width = 1.0 / n as f64;
    let peak_ok = (sine.frequencies[peak] - target).abs() <= bin_width;
    let peak_ratio = sine.power[peak] / sine.median_power();
    let sine_time = start.elapsed();

    let start = Instant::now();
    let step = periodogram(&synth_signal(SyntheticKind::SineStep { dz: 1.5 }, n).unwrap()).unwrap();
    let step_ratio = off_peak_total(&step.power, peak) / off_peak_total(&sine.power, peak);
    let step_time = start.elapsed();

    let synthetic_ok = peak_ok
        && peak_ratio >= 100.0
        && step_ratio >= 10.0
        && sine_time < Duration::from_secs(1)
        && step_time < Duration::from_secs(1);
    let synthetic = format!(
        "sine peak {:.6} (target {target:.6}) at {peak_ratio:.0}x median; step off-peak {step_ratio:.1}x",
        sine.frequencies[peak]
    );

    let Some(path) = btc_path() else {
        if !synthetic_ok {
            return Fail(synthetic);
        }
        return Blocked(format!("{synthetic}; BTC part needs {BTC_ENV}"));
    };
    let btc = match load_btc(&path) {
        Ok(s) => s,
        Err(e) => return Fail(e),
    };
    let start = Instant::now();
    let p = periodogram(&btc).unwrap();
    let btc_time = start.elapsed();
    let btc_ratio = p.power[p.peak()] / p.median_power();
    verdict(
        synthetic_ok && btc_ratio < 100.0 && btc_time < Duration::from_secs(1),
        format!("{synthetic}; BTC max non-DC bin {btc_ratio:.0}x median"),
    )
}

fn rel_close(a: f64, b: f64, tol: f64, floor: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(floor)
}

/// Full-grid minimum scored through the public model path: `(rms, dt, p1, p2)`.
fn exhaustive(series: &PriceSeries, grid: &CalibrationGrid) -> (f64, f64, f64, f64) {
    let (t1, t2) = (series.day_index()[0], *series.day_index().last().unwrap());
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    for &dt in &grid.dt {
        for &p1 in &grid.p1 {
            for &g in &grid.growth {
                let p2 = p1 * (1.0 + g);
                let model = HsfModel::covering(p1, p2, dt, t1, t2).unwrap();
                let r = rms_values(
                    series.values(),
                    &model.evaluate(series.day_index()).unwrap(),
                );
                if r < best.0 {
                    best = (r, dt, p1, p2);
                }
            }
        }
    }
    best
}

fn hsf_window(p1: f64, p2: f64, dt: f64, len: usize) -> PriceSeries {
    let model = HsfModel::covering(p1, p2, dt, 0, len - 1).unwrap();
    let days: Vec<usize> = (0..len).collect();
    PriceSeries::new("hsf", synthetic_dates(len), model.evaluate(&days).unwrap()).unwrap()
}

fn oracle_equivalence() -> Verdict {
    let grid = CalibrationGrid::new(
        vec![3.0, 4.0, 5.0, 6.0, 7.0],
        vec![150.0, 175.0, 200.0, 225.0, 250.0],
        vec![0.01, 0.02, 0.05, 0.1],
    )
    .with_refinement(true);
    let full = grid.subdivided();
    let cases = [
        (200.0, 0.05, 5.0, 60),
        (150.0, 0.02, 4.0, 50),
        (250.0, 0.1, 6.0, 70),
        (175.0, 0.01, 3.0, 40),
        (225.0, 0.02, 7.0, 80),
    ];
    let mut failures = Vec::new();
    for (p1, g, dt, len) in cases {
        let p2 = p1 * (1.0 + g);
        let data = hsf_window(p1, p2, dt, len);
        let window = full_window(&data).unwrap();
        let fit = calibrate(&data, &window, &grid).unwrap();
        let oracle = exhaustive(&data, &full);
        // noiseless optima sit at rounding level, so the floor is the price scale
        let scale = baseline_rms(data.values());
        let exact =
            fit.model.dt == dt && fit.model.p1 == p1 && rel_close(fit.model.p2, p2, 1e-12, 0.0);
        let same = rel_close(fit.rms, oracle.0, 1e-9, scale)
            && (fit.model.dt, fit.model.p1) == (oracle.1, oracle.2);
        if !(exact && same) {
            failures.push(format!(
                "({p1},{p2},{dt}) -> ({},{},{})",
                fit.model.p1, fit.model.p2, fit.model.dt
            ));
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            "5/5 generating triples recovered; coarse-to-fine equals full-grid optimum".into()
        } else {
            failures.join("; ")
        },
    )
}

fn run_cli(args: &[&str], out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_hsfkit"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .env_remove("HSFKIT_OUTPUT_DIR")
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn identical_dirs(a: &Path, b: &Path) -> bool {
    let names = |d: &Path| {
        let mut v: Vec<_> = fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        v.sort();
        v
    };
    let (na, nb) = (names(a), names(b));
    na == nb
        && na
            .iter()
            .all(|n| fs::read(a.join(n)).unwrap() == fs::read(b.join(n)).unwrap())
}

fn property_suites() -> Verdict {
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    let fib = generate(1.0, 1.0, 40).unwrap();
    check(
        "fibonacci",
        fib[..10] == [1.0, 1.0, 2.0, 3.0, 5.0, 8.0, 13.0, 21.0, 34.0, 55.0]
            && fib.windows(3).all(|w| w[2] == w[0] + w[1]),
    );

    let mut scaling = true;
    for _ in 0..200 {
        let (p1, g, c) = (
            rng.random_range(0.1..100.0),
            rng.random_range(0.0..0.2),
            rng.random_range(0.01..50.0),
        );
        let base = generate(p1, p1 * (1.0 + g), 30).unwrap();
        let scaled = generate(c * p1, c * p1 * (1.0 + g), 30).unwrap();
        scaling &= base
            .iter()
            .zip(&scaled)
            .all(|(b, s)| rel_close(c * b, *s, 1e-12, 0.0));
    }
    check("generate scaling", scaling);

    let x: Vec<f64> = (0..100).map(|_| rng.random_range(1.0..1e4)).collect();
    let shifted: Vec<f64> = x.iter().map(|v| v - 37.5).collect();
    check("rms identical", rms_values(&x, &x) == 0.0);
    check(
        "rms offset",
        rel_close(rms_values(&x, &shifted), 37.5, 1e-12, 0.0),
    );

    let mut parseval = true;
    for n in [8, 9, 1000, 2047, 2048] {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1e3..1e3)).collect();
        let energy: f64 = v.iter().map(|a| a * a).sum();
        parseval &= rel_close(
            periodogram_values(&v).unwrap().total_energy(),
            energy,
            1e-6,
            0.0,
        );
    }
    check("parseval", parseval);

    let prices: Vec<f64> = (0..120).map(|_| rng.random_range(10.0..5e4)).collect();
    let s = PriceSeries::new("r", synthetic_dates(prices.len()), prices).unwrap();
    let w = window_stats(&s, 10, 100).unwrap();
    let norm = normalize(&s, &w).unwrap();
    let sub = s.index_range(10, 100).unwrap();
    check(
        "normalize round trip",
        norm.denormalize()
            .iter()
            .zip(sub.day_index().iter().zip(sub.values()))
            .all(|((t, p), (dt, dp))| {
                (*t - *dt as f64).abs() < 1e-9 && rel_close(*p, *dp, 1e-12, 0.0)
            }),
    );

    let up_data = {
        let clean = hsf_window(30.0, 30.3, 2.5, 35);
        let noisy: Vec<f64> = clean
            .values()
            .iter()
            .map(|v| v * (1.0 + rng.random_range(-0.02..0.02)))
            .collect();
        PriceSeries::new("u", synthetic_dates(35), noisy).unwrap()
    };
    let mut rev_values = up_data.values().to_vec();
    rev_values.reverse();
    let down_data = PriceSeries::new("d", synthetic_dates(35), rev_values).unwrap();
    let win = full_window(&up_data).unwrap();
    let up = calibrate(
        &up_data,
        &win,
        &CalibrationGrid::paper_defaults(up_data.values()),
    )
    .unwrap();
    let down = fit_decline(
        &down_data,
        &win,
        &CalibrationGrid::decline_defaults(down_data.values()),
    )
    .unwrap();
    check(
        "reversal duality",
        up.rms == down.rms
            && (up.model.p1, up.model.p2, up.model.dt)
                == (down.model.p1, down.model.p2, down.model.dt),
    );

    check(
        "correlate self",
        correlate(&s, &s)
            .map(|c| (c.r2 - 1.0).abs() < 1e-12)
            .unwrap_or(false),
    );

    let tmp = tempfile::TempDir::new().unwrap();
    let mut reruns = true;
    for (i, args) in [
        &["fit", "--synthetic", "hsf"][..],
        &["spectrum", "--synthetic", "sine_step"][..],
        &["benford", "--synthetic", "benford"][..],
    ]
    .iter()
    .enumerate()
    {
        let (a, b) = (
            tmp.path().join(format!("a{i}")),
            tmp.path().join(format!("b{i}")),
        );
        reruns &= run_cli(args, &a) && run_cli(args, &b) && identical_dirs(&a, &b);
    }
    check("byte-identical reruns", reruns);

    verdict(
        failed.is_empty(),
        if failed.is_empty() {
            "fibonacci, scaling, rms cases, parseval, round trip, duality, self-correlation, reruns"
                .into()
        } else {
            format!("failed: {}", failed.join(", "))
        },
    )
}

fn self_similarity() -> Verdict {
    let Some(path) = btc_path() else {
        return blocked();
    };
    let series = match load_btc(&path) {
        Ok(s) => s,
        Err(e) => return Fail(e),
    };
    let mut events = Vec::new();
    for entry in catalog() {
        match entry.resolve(&series).and_then(|w| normalize(&series, &w)) {
            Ok(n) => events.push(n),
            Err(e) => return Fail(format!("event {}: {e}", entry.event)),
        }
    }
    let in_square = events.iter().all(|e| {
        e.tau.iter().chain(&e.nu).all(|v| (0.0..=1.0).contains(v))
            && e.tau[0] == 0.0
            && *e.tau.last().unwrap() == 1.0
            && e.nu.contains(&0.0)
            && e.nu.contains(&1.0)
    });
    let avg = average_curve(&events, 101).unwrap();
    let mid = curve_at(&avg, 0.5);
    verdict(
        events.len() == 14 && in_square && mid < 0.4,
        format!(
            "{} events in unit square: {in_square}; mean nu(0.5) = {mid:.3}",
            events.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("benford reproduction", benford_reproduction),
        ("event fit quality", catalog_fit_quality),
        ("event 10 parameters", event10_parameters),
        ("spectral controls", spectral_controls),
        ("oracle equivalence", oracle_equivalence),
        ("property suites", property_suites),
        ("self-similarity overlay", self_similarity),
    ];
    let (mut pass, mut fail, mut blocked) = (0, 0, 0);
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Pass(d) => {
                pass += 1;
                ("PASS", d)
            }
            Fail(d) => {
                fail += 1;
                ("FAIL", d)
            }
            Blocked(d) => {
                blocked += 1;
                ("BLOCKED", d)
            }
        };
        println!("acceptance {} {name}: {tag} ({detail})", i + 1);
    }
    println!("acceptance summary: {pass} pass, {fail} fail, {blocked} blocked");
    if fail > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
