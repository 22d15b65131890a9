//! `evlife`: synthesize, filter, fit, render and evaluate event streams.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use evlife_core::{FilterMode, SensorGeometry};

/// Bad invocation: exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "evlife", version, about = "Per-event lifetime estimation for event cameras", args_override_self = true)]
pub struct Cli {
    /// File of `key = value` lines supplying defaults for any flag.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, env = "EVLIFE_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for fitting and sweeps; output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a stripes event stream with ground truth.
    Synth(SynthArgs),
    /// Drop events without recent neighbouring support.
    Filter(FilterArgs),
    /// Estimate a lifetime and flow for every event.
    Detect(DetectArgs),
    /// Render an edge or lifetime image at a query time.
    Render(RenderArgs),
    /// Score edge maps, noise sweeps and lifetime estimates.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run both intra-pixel sweeps with default settings.
    Fig4(Fig4AllArgs),
    /// Summarize an event file.
    Info(InfoArgs),
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// Compare two edge images.
    Cdm(CdmArgs),
    /// Monte-Carlo sweep over noise level and intra-pixel radius.
    Fig4(Fig4Args),
    /// Score lifetime estimates against ground truth.
    Lifetime(LifetimeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GeometryArgs {
    /// Sensor width in pixels.
    #[arg(long, requires = "h", conflicts_with = "geometry")]
    pub w: Option<u32>,
    /// Sensor height in pixels.
    #[arg(long, requires = "w")]
    pub h: Option<u32>,
    #[arg(long, value_name = "WxH")]
    pub geometry: Option<String>,
}

impl GeometryArgs {
    pub fn resolve(&self) -> anyhow::Result<Option<SensorGeometry>> {
        let (w, h) = match (&self.geometry, self.w, self.h) {
            (Some(s), _, _) => {
                let (w, h) = s
                    .split_once(['x', 'X'])
                    .and_then(|(w, h)| Some((w.trim().parse().ok()?, h.trim().parse().ok()?)))
                    .ok_or_else(|| UsageError(format!("geometry {s:?} is not WxH")))?;
                (w, h)
            }
            (None, Some(w), Some(h)) => (w, h),
            _ => return Ok(None),
        };
        SensorGeometry::new(w, h)
            .map(Some)
            .map_err(|e| UsageError(e.to_string()).into())
    }

    pub fn require(&self) -> anyhow::Result<SensorGeometry> {
        self.resolve()?
            .ok_or_else(|| UsageError("event input needs --w/--h or --geometry".into()).into())
    }
}

fn parse_filter_mode(s: &str) -> Result<FilterMode, String> {
    s.parse().map_err(|e: evlife_core::Error| e.to_string())
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Number of stripes.
    #[arg(long, default_value_t = 8)]
    pub stripes: usize,
    /// Stripe spacing, pixels.
    #[arg(long, default_value_t = 16.0)]
    pub spacing: f64,
    /// Pixels per second.
    #[arg(long, default_value_t = 100.0)]
    pub velocity: f64,
    /// Seconds.
    #[arg(long, default_value_t = 0.5)]
    pub duration: f64,
    /// Std-dev of timestamp noise, seconds.
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    /// Isolated noise events per second per pixel.
    #[arg(long, default_value_t = 0.0)]
    pub noise_rate: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth CSV path.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct FilterFlags {
    /// Seconds.
    #[arg(long, default_value_t = evlife_core::buffer_filter::DEFAULT_TAU_MIN)]
    pub tau_min: f64,
    /// causal or symmetric.
    #[arg(long = "filter-mode", value_parser = parse_filter_mode, default_value = "symmetric")]
    pub mode: FilterMode,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub filter: FilterFlags,
}

#[derive(Args, Debug, Clone)]
pub struct RansacFlags {
    /// Odd window side.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Intra-pixel radius, pixels.
    #[arg(long, default_value_t = evlife_core::plane_fit::DEFAULT_DELTA)]
    pub delta: f64,
    /// Inlier distance threshold.
    #[arg(long, default_value_t = evlife_core::plane_fit::DEFAULT_INLIER_EPS)]
    pub eps: f64,
    #[arg(long, default_value_t = evlife_core::plane_fit::DEFAULT_ITERATIONS)]
    pub iterations: usize,
    /// Inliers required besides the event itself.
    #[arg(long, default_value_t = evlife_core::plane_fit::DEFAULT_MIN_INLIERS)]
    pub min_inliers: usize,
    /// Score every candidate pair instead of sampling.
    #[arg(long)]
    pub exhaustive: bool,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub ransac: RansacFlags,
    #[command(flatten)]
    pub filter: FilterFlags,
    /// Fit every event, skipping the noise filter.
    #[arg(long)]
    pub no_filter: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    /// Events still alive at the query time (lifetime CSV input).
    Lifetime,
    /// Fixed time window (event file input).
    Time,
    /// Fixed event count (event file input).
    Count,
    /// Grayscale per-pixel mean lifetime (lifetime CSV input).
    TauMap,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long, value_enum)]
    pub mode: RenderMode,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Query time, seconds.
    #[arg(long)]
    pub at: Option<f64>,
    /// Accumulation window, seconds.
    #[arg(long, default_value_t = 0.03)]
    pub window: f64,
    /// Number of accumulated events.
    #[arg(long, default_value_t = 5000)]
    pub count: usize,
    /// Longest time an event may stay alive, seconds.
    #[arg(long, default_value_t = evlife_core::render::DEFAULT_TAU_CLAMP)]
    pub tau_clamp: f64,
    /// Lifetime mapped to black, seconds.
    #[arg(long, default_value_t = 0.0)]
    pub lo: f64,
    /// Lifetime mapped to white, seconds.
    #[arg(long, default_value_t = 0.05)]
    pub hi: f64,
}

#[derive(Args, Debug)]
pub struct CdmArgs {
    #[arg(long)]
    pub f: PathBuf,
    #[arg(long)]
    pub g: PathBuf,
    #[arg(long, default_value_t = evlife_core::eval::cdm::DEFAULT_ETA)]
    pub eta: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Global,
    Scattered,
}

#[derive(Args, Debug)]
pub struct Fig4Args {
    #[arg(long, value_enum, default_value = "global")]
    pub mode: SweepMode,
    /// Comma-separated timestamp noise levels, seconds.
    #[arg(long, value_delimiter = ',', default_value = "0.0002,0.0005,0.001,0.002,0.003,0.005,0.0075,0.01")]
    pub sigmas: Vec<f64>,
    /// Comma-separated intra-pixel radii.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25")]
    pub deltas: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub repetitions: usize,
    /// Fraction of pixels perturbed in scattered mode.
    #[arg(long, default_value_t = 0.2)]
    pub scatter_fraction: f64,
    #[command(flatten)]
    pub ransac: RansacFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Fig4AllArgs {
    /// Directory receiving fig4a.csv and fig4b.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub repetitions: usize,
}

#[derive(Args, Debug)]
pub struct LifetimeArgs {
    /// Lifetime CSV from `detect`.
    #[arg(long)]
    pub estimates: PathBuf,
    /// Ground-truth CSV from `synth`.
    #[arg(long)]
    pub truth: PathBuf,
    /// Event file the truth rows index into.
    #[arg(long)]
    pub events: PathBuf,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Histogram bin width, seconds.
    #[arg(long, default_value_t = evlife_core::eval::DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
    /// Histogram CSV path.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InfoArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

/// Parses argv, folding in `--config` entries beneath any explicit flags.
fn parse_args(argv: Vec<String>) -> Result<Cli, anyhow::Error> {
    let cmd = Cli::command();
    let loose = cmd.clone().ignore_errors(true).try_get_matches_from(&argv);
    let config = loose
        .as_ref()
        .ok()
        .and_then(|m| m.get_one::<PathBuf>("config").cloned());
    let argv = match (config, loose) {
        (Some(path), Ok(m)) => {
            let mut names = Vec::new();
            let mut cur = &m;
            while let Some((name, sub)) = cur.subcommand() {
                names.push(name.to_string());
                cur = sub;
            }
            let entries = config::load(&path)?;
            config::merge(&cmd, &argv, &names, &entries)?
        }
        _ => argv,
    };
    Ok(Cli::try_parse_from(argv)?)
}

fn is_usage(err: &anyhow::Error) -> bool {
    err.chain().any(|c| {
        c.downcast_ref::<UsageError>().is_some()
            || matches!(c.downcast_ref::<evlife_core::Error>(), Some(evlife_core::Error::InvalidParameter(_)))
    })
}

fn main() -> ExitCode {
    let cli = match parse_args(std::env::args().collect()) {
        Ok(cli) => cli,
        Err(err) => {
            if let Some(clap_err) = err.downcast_ref::<clap::Error>() {
                let _ = clap_err.print();
                return match clap_err.kind() {
                    clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                    _ => ExitCode::from(1),
                };
            }
            eprintln!("error: {err:#}");
            return ExitCode::from(if is_usage(&err) { 1 } else { 2 });
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_usage(&err) { 1 } else { 2 })
        }
    }
}
