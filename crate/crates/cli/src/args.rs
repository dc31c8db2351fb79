use std::path::PathBuf;
use std::str::FromStr;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

/// Seed used for synthetic noise unless `--seed` is given.
pub const DEFAULT_SEED: u64 = 20_210_627;

#[derive(Debug, Parser)]
#[command(
    name = "hsfkit",
    version,
    about = "Price-episode analysis: spectra, Benford tests, HSF fits, overlays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Periodogram, spectrogram and discontinuity detections.
    Spectrum(SpectrumArgs),
    /// First-digit Benford conformity test.
    Benford(BenfordArgs),
    /// Hockey Stick Function fits per event window.
    Fit(FitArgs),
    /// Normalized event overlay and average curve.
    Overlay(OverlayArgs),
    /// Squared price correlation between two series.
    Correlate(CorrelateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Yahoo-style CSV export (repeat for commands that take several).
    #[arg(long = "input", value_name = "PATH")]
    pub inputs: Vec<PathBuf>,

    /// Price column to read.
    #[arg(long, default_value = "Open")]
    pub column: String,

    /// First date to keep (YYYY-MM-DD).
    #[arg(long, value_parser = parse_date)]
    pub from: Option<NaiveDate>,

    /// Last date to keep (YYYY-MM-DD).
    #[arg(long, value_parser = parse_date)]
    pub to: Option<NaiveDate>,

    /// Keep at most this many samples after the date filter.
    #[arg(long)]
    pub days: Option<usize>,

    /// Built-in synthetic input instead of a file.
    #[arg(long, value_name = "KIND")]
    pub synthetic: Option<String>,

    /// Sample count for synthetic signals.
    #[arg(long, default_value_t = 2048)]
    pub length: usize,

    /// Seed for synthetic noise.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Directory receiving all output files.
    #[arg(long, env = "HSFKIT_OUTPUT_DIR", default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,

    /// Spectrogram window length in samples.
    #[arg(long, default_value_t = hsfkit_core::spectral::DEFAULT_WINDOW_LEN)]
    pub window: usize,

    /// Spectrogram hop in samples.
    #[arg(long, default_value_t = hsfkit_core::spectral::DEFAULT_HOP)]
    pub hop: usize,

    /// Column-power multiple of the median that flags a discontinuity.
    #[arg(long, default_value_t = hsfkit_core::spectral::DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct BenfordArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventSelector {
    All,
    One(u32),
}

impl FromStr for EventSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Self::All);
        }
        s.parse()
            .map(Self::One)
            .map_err(|_| format!("expected an event number or `all`, got `{s}`"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct EventArgs {
    /// Catalog event number, or `all`; may be repeated.
    #[arg(long = "event", visible_alias = "events", value_name = "N|all")]
    pub events: Vec<EventSelector>,

    /// Explicit window start (day index).
    #[arg(long, requires = "t2")]
    pub t1: Option<usize>,

    /// Explicit window end (day index).
    #[arg(long, requires = "t1")]
    pub t2: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,

    #[command(flatten)]
    pub select: EventArgs,

    /// Fit falling windows with a time-reversed HSF.
    #[arg(long)]
    pub decline: bool,

    /// Minimum fractional drop for automatically found declines.
    #[arg(long, default_value_t = 0.2)]
    pub min_drop: f64,

    /// Use the documented default grid; rejects grid overrides.
    #[arg(long, conflicts_with_all = ["dt_max", "no_refine"])]
    pub paper_defaults: bool,

    /// Largest dt to scan, in days.
    #[arg(long)]
    pub dt_max: Option<f64>,

    /// Skip the refinement pass.
    #[arg(long)]
    pub no_refine: bool,
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    #[command(flatten)]
    pub common: Common,

    #[command(flatten)]
    pub select: EventArgs,

    /// Points on the normalized-time grid of the average curve.
    #[arg(long, default_value_t = 101)]
    pub grid_points: usize,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub common: Common,
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, hsfkit_core::ingest::DATE_FORMAT)
        .map_err(|e| format!("`{s}` is not a YYYY-MM-DD date: {e}"))
}
