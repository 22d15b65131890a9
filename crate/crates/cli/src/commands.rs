use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use evlife_core::buffer_filter::{self, polarity_counts};
use evlife_core::eval::fig4::{rows_to_csv, sweep_fig4, Fig4Config};
use evlife_core::eval::{cdm, lifetime_stats, peak_mass, CdmParams};
use evlife_core::image::write_pgm_gray;
use evlife_core::lifetime::{parse_lifetime_csv, write_lifetime_csv};
use evlife_core::render::{accumulate_count, accumulate_time, lifetime_map, render_lifetime};
use evlife_core::synth::{gen_stripes, parse_truth_csv, NoiseMode, NoiseSpec, StripeScene};
use evlife_core::*;

use crate::*;

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(cli, a),
        Command::Filter(a) => filter(a),
        Command::Detect(a) => detect(cli, a),
        Command::Render(a) => render(a),
        Command::Eval(EvalCommand::Cdm(a)) => eval_cdm(a),
        Command::Eval(EvalCommand::Fig4(a)) => eval_fig4(cli, a),
        Command::Eval(EvalCommand::Lifetime(a)) => eval_lifetime(a),
        Command::Fig4(a) => fig4_all(cli, a),
        Command::Info(a) => info(a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_events(path: &Path, geometry: SensorGeometry) -> Result<EventStream> {
    parse_event_text(&read_text(path)?, geometry).with_context(|| format!("parsing {}", path.display()))
}

fn read_lifetimes(path: &Path) -> Result<Vec<LifetimedEvent>> {
    parse_lifetime_csv(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// Writes to `path`, or stdout when absent.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .context("building thread pool")?
            .install(f)),
        None => Ok(f()),
    }
}

fn filter_params(f: &FilterFlags) -> FilterParams {
    FilterParams {
        tau_min: f.tau_min,
        mode: f.mode,
        ..FilterParams::default()
    }
}

fn ransac_params(r: &RansacFlags, seed: u64) -> RansacParams {
    RansacParams {
        window_n: r.window,
        delta: r.delta,
        inlier_eps: r.eps,
        iterations: r.iterations,
        min_inliers: r.min_inliers,
        seed,
        exhaustive: r.exhaustive,
    }
}

fn synth(cli: &Cli, a: &SynthArgs) -> Result<()> {
    let geometry = a.geometry.resolve()?.unwrap_or(SensorGeometry::new(128, 128)?);
    let scene = StripeScene::evenly_spaced(geometry, a.stripes, a.spacing, a.velocity, a.duration);
    let mut labeled = gen_stripes(&scene)?;
    if a.jitter > 0.0 {
        labeled = labeled.with_timestamp_jitter(a.jitter, cli.seed);
    }
    if a.noise_rate > 0.0 {
        let spec = NoiseSpec {
            isolated_rate: a.noise_rate,
            seed: cli.seed,
            ..NoiseSpec::default()
        };
        spec.validate()?;
        labeled = labeled.with_isolated_noise(&spec, a.duration);
    }
    emit(Some(&a.out), write_event_text(&labeled.stream).as_bytes())?;
    if let Some(truth) = &a.truth {
        emit(Some(truth), labeled.truth_csv().as_bytes())?;
    }
    Ok(())
}

fn filter(a: &FilterArgs) -> Result<()> {
    let stream = read_events(&a.input, a.geometry.require()?)?;
    let params = filter_params(&a.filter);
    params.validate()?;
    let kept = buffer_filter::filter(&stream, &params);
    emit(a.out.as_deref(), write_event_text(&kept).as_bytes())
}

fn detect(cli: &Cli, a: &DetectArgs) -> Result<()> {
    let stream = read_events(&a.input, a.geometry.require()?)?;
    let params = PipelineParams {
        filter: (!a.no_filter).then(|| filter_params(&a.filter)),
        ransac: ransac_params(&a.ransac, cli.seed),
        threads: cli.threads,
    };
    let out = process_stream(&stream, &params)?;
    emit(a.out.as_deref(), write_lifetime_csv(&out).as_bytes())
}

/// Smallest sensor holding every event, for CSV inputs without a stated geometry.
fn inferred_geometry(events: &[LifetimedEvent]) -> Result<SensorGeometry> {
    let w = events.iter().map(|e| e.event.x + 1).max().unwrap_or(1);
    let h = events.iter().map(|e| e.event.y + 1).max().unwrap_or(1);
    Ok(SensorGeometry::new(w, h)?)
}

fn render(a: &RenderArgs) -> Result<()> {
    let at = || -> Result<f64> {
        let at = a.at.ok_or_else(|| UsageError(format!("--at is required for {:?} mode", a.mode)))?;
        if !(at >= 0.0) {
            return Err(UsageError("--at must be non-negative".into()).into());
        }
        Ok(at)
    };
    let bytes = match a.mode {
        RenderMode::Lifetime | RenderMode::TauMap => {
            let events = read_lifetimes(&a.input)?;
            let geometry = match a.geometry.resolve()? {
                Some(g) => g,
                None => inferred_geometry(&events)?,
            };
            if a.mode == RenderMode::Lifetime {
                let q = RenderQuery {
                    at_time: at()?,
                    tau_clamp: a.tau_clamp,
                };
                write_pgm(&render_lifetime(&events, &q, geometry))
            } else {
                if !(a.hi > a.lo) {
                    return Err(UsageError("--hi must exceed --lo".into()).into());
                }
                write_pgm_gray(&lifetime_map(&events, geometry, a.lo, a.hi))
            }
        }
        RenderMode::Time => {
            let geometry = a.geometry.require()?;
            if !(a.window > 0.0) {
                return Err(UsageError("--window must be positive".into()).into());
            }
            let stream = read_events(&a.input, geometry)?;
            write_pgm(&accumulate_time(&stream, at()?, a.window, geometry))
        }
        RenderMode::Count => {
            let geometry = a.geometry.require()?;
            if a.count == 0 {
                return Err(UsageError("--count must be at least 1".into()).into());
            }
            let stream = read_events(&a.input, geometry)?;
            write_pgm(&accumulate_count(&stream, at()?, a.count, geometry))
        }
    };
    emit(a.out.as_deref(), &bytes)
}

fn read_image(path: &Path) -> Result<EdgeImage> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    read_pgm(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn eval_cdm(a: &CdmArgs) -> Result<()> {
    let report = cdm(&read_image(&a.f)?, &read_image(&a.g)?, &CdmParams { eta: a.eta })?;
    emit(a.out.as_deref(), format!("{}\n", report.to_json()).as_bytes())
}

fn eval_fig4(cli: &Cli, a: &Fig4Args) -> Result<()> {
    let mode = match a.mode {
        SweepMode::Global => NoiseMode::Global,
        SweepMode::Scattered => NoiseMode::Scattered,
    };
    let config = Fig4Config {
        mode,
        normal: Fig4Config::default_normal(),
        window_n: a.ransac.window,
        sigmas: a.sigmas.clone(),
        deltas: a.deltas.clone(),
        repetitions: a.repetitions,
        seed: cli.seed,
        scatter_fraction: if mode == NoiseMode::Scattered { a.scatter_fraction } else { 0.0 },
        ransac: ransac_params(&a.ransac, cli.seed),
    };
    let rows = in_pool(cli.threads, || sweep_fig4(&config))??;
    emit(a.out.as_deref(), rows_to_csv(mode, &rows).as_bytes())
}

fn fig4_all(cli: &Cli, a: &Fig4AllArgs) -> Result<()> {
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let mut global = Fig4Config::global(vec![0.0002, 0.0005, 0.001, 0.002, 0.003, 0.005, 0.0075, 0.01]);
    let mut scattered = Fig4Config::scattered(0.005, vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45]);
    for (config, name) in [(&mut global, "fig4a.csv"), (&mut scattered, "fig4b.csv")] {
        config.repetitions = a.repetitions;
        config.seed = cli.seed;
        config.ransac.seed = cli.seed;
        let rows = in_pool(cli.threads, || sweep_fig4(config))??;
        emit(Some(&a.out_dir.join(name)), rows_to_csv(config.mode, &rows).as_bytes())?;
    }
    Ok(())
}

fn eval_lifetime(a: &LifetimeArgs) -> Result<()> {
    let estimates = read_lifetimes(&a.estimates)?;
    let events = read_events(&a.events, a.geometry.require()?)?;
    let truth = parse_truth_csv(&read_text(&a.truth)?).with_context(|| format!("parsing {}", a.truth.display()))?;
    if truth.len() != events.len() {
        anyhow::bail!("truth has {} rows but the event file has {} events", truth.len(), events.len());
    }
    let mut noise = HashSet::new();
    let mut lifetimes = HashMap::new();
    for (e, l) in events.events().iter().zip(&truth) {
        match l {
            Some(l) => {
                lifetimes.insert(e.key(), *l);
            }
            None => {
                noise.insert(e.key());
            }
        }
    }
    // Injected noise has no true lifetime and is left out of the scores.
    let estimates: Vec<LifetimedEvent> = estimates
        .into_iter()
        .filter(|le| {
            let k = le.event.key();
            lifetimes.contains_key(&k) || !noise.contains(&k)
        })
        .collect();
    let truth = lifetimes;
    let stats = lifetime_stats(&estimates, &truth, a.bin_width)?;
    let (mass, _) = peak_mass(&estimates, &truth, 0.1, |_| true);
    let report = format!(
        "scored,mean_abs_error,peak_mass_10pct\n{},{},{}\n",
        stats.scored, stats.mean_abs_error, mass
    );
    emit(a.out.as_deref(), report.as_bytes())?;
    if let Some(path) = &a.histogram {
        emit(Some(path), stats.histogram.to_csv().as_bytes())?;
    }
    Ok(())
}

fn info(a: &InfoArgs) -> Result<()> {
    let geometry = a.geometry.require()?;
    let stream = read_events(&a.input, geometry)?;
    let (pos, neg) = polarity_counts(&stream);
    let start = stream.events().first().map_or(0.0, |e| e.t);
    let text = format!(
        "geometry {geometry}\nevents {}\npositive {pos}\nnegative {neg}\nstart {start}\nend {}\n",
        stream.len(),
        stream.end_time()
    );
    emit(None, text.as_bytes())
}
