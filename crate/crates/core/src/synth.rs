//! Synthetic event streams and SAE windows with known ground truth.

use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::events::{Event, EventStream, Polarity, SensorGeometry};
use crate::plane_fit::{PlaneNormal, ANCHOR_TIME};
use crate::sae::SaeWindow;
use crate::seed;

/// Vertical stripes translating along +x at constant velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct StripeScene {
    pub geometry: SensorGeometry,
    /// Column of each stripe at t = 0, in pixels.
    pub stripe_positions: Vec<f64>,
    /// Pixels per second; must be non-zero.
    pub velocity: f64,
    pub duration: f64,
    pub polarity: Polarity,
}

impl StripeScene {
    /// `count` stripes spaced `spacing` pixels apart starting at column 0.
    pub fn evenly_spaced(
        geometry: SensorGeometry,
        count: usize,
        spacing: f64,
        velocity: f64,
        duration: f64,
    ) -> Self {
        Self {
            geometry,
            stripe_positions: (0..count).map(|i| i as f64 * spacing).collect(),
            velocity,
            duration,
            polarity: Polarity::Positive,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::InvalidParameter("stripe duration must be positive".into()));
        }
        if self.velocity == 0.0 || !self.velocity.is_finite() {
            return Err(Error::InvalidParameter("stripe velocity must be non-zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Spurious events per second per pixel.
    pub isolated_rate: f64,
    /// Std-dev of the Gaussian timestamp perturbation, seconds.
    pub timestamp_sigma: f64,
    pub scatter_fraction: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            isolated_rate: 0.0,
            timestamp_sigma: 0.0,
            scatter_fraction: 0.0,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.isolated_rate >= 0.0) || !(self.timestamp_sigma >= 0.0) {
            return Err(Error::InvalidParameter("noise rates must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.scatter_fraction) {
            return Err(Error::InvalidParameter("scatter_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Whether planar-window noise hits every pixel or a random subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Global,
    Scattered,
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(NoiseMode::Global),
            "scattered" => Ok(NoiseMode::Scattered),
            other => Err(Error::InvalidParameter(format!("unknown noise mode {other:?}"))),
        }
    }
}

/// An event stream with per-event ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    pub stream: EventStream,
    /// True lifetime of each event; `None` for injected noise.
    pub lifetime: Vec<Option<f64>>,
}

impl Labeled {
    pub fn noise_flags(&self) -> Vec<bool> {
        self.lifetime.iter().map(Option::is_none).collect()
    }

    pub fn with_isolated_noise(&self, spec: &NoiseSpec, duration: f64) -> Labeled {
        let injected = inject_isolated_noise(&self.stream, spec, duration);
        let lifetime = injected
            .origin
            .iter()
            .map(|o| o.and_then(|i| self.lifetime[i]))
            .collect();
        Labeled {
            stream: injected.stream,
            lifetime,
        }
    }

    pub fn with_timestamp_jitter(&self, sigma: f64, seed: u64) -> Labeled {
        let (stream, origin) = jitter_timestamps(&self.stream, sigma, seed);
        let lifetime = origin.iter().map(|&i| self.lifetime[i]).collect();
        Labeled { stream, lifetime }
    }

    /// Ground-truth CSV: `index,lifetime,is_noise`.
    pub fn truth_csv(&self) -> String {
        let mut out = String::from("index,lifetime,is_noise\n");
        for (i, l) in self.lifetime.iter().enumerate() {
            match l {
                Some(v) => writeln!(out, "{i},{v},0"),
                None => writeln!(out, "{i},,1"),
            }
            .expect("writing to a String");
        }
        out
    }
}

/// Parses the ground-truth CSV back into per-index lifetimes.
pub fn parse_truth_csv(text: &str) -> Result<Vec<Option<f64>>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::MalformedLine {
            line: lineno + 1,
            reason: reason.into(),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad("expected index,lifetime,is_noise"));
        }
        let index: usize = fields[0].parse().map_err(|_| bad("bad index"))?;
        if index != out.len() {
            return Err(bad("indices must be consecutive from 0"));
        }
        let lifetime = match (fields[1], fields[2].trim()) {
            (_, "1") => None,
            (v, "0") => Some(v.parse().map_err(|_| bad("bad lifetime"))?),
            _ => return Err(bad("is_noise must be 0 or 1")),
        };
        out.push(lifetime);
    }
    Ok(out)
}

/// One event per stripe crossing of each pixel column, on every row.
///
/// A stripe starting at column `x0` crosses column `c` at `(c - x0) / v`;
/// crossings outside `[0, duration)` are dropped. Every event's true
/// lifetime is the single-pixel traversal time `1 / |v|`.
pub fn gen_stripes(scene: &StripeScene) -> Result<Labeled> {
    scene.validate()?;
    let g = scene.geometry;
    let mut events = Vec::new();
    for &x0 in &scene.stripe_positions {
        for c in 0..g.width() {
            let t = (c as f64 - x0) / scene.velocity;
            if !(0.0..scene.duration).contains(&t) {
                continue;
            }
            for y in 0..g.height() {
                events.push(Event::new(t, c, y, scene.polarity));
            }
        }
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.y.cmp(&b.y)).then(a.x.cmp(&b.x)));
    let lifetime = vec![Some(1.0 / scene.velocity.abs()); events.len()];
    Ok(Labeled {
        stream: EventStream::new(g, events)?,
        lifetime,
    })
}

/// Result of merging injected noise into a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Injected {
    pub stream: EventStream,
    pub noise_flags: Vec<bool>,
    /// Index of each output event in the input stream, `None` for noise.
    pub origin: Vec<Option<usize>>,
}

/// Adds Poisson-distributed spurious events uniform over pixels, `[0, duration)`
/// and polarity.
pub fn inject_isolated_noise(stream: &EventStream, spec: &NoiseSpec, duration: f64) -> Injected {
    let g = stream.geometry();
    let mut tagged: Vec<(Event, Option<usize>)> = stream
        .events()
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, Some(i)))
        .collect();
    let lambda = spec.isolated_rate * g.pixel_count() as f64 * duration;
    if lambda > 0.0 {
        let mut rng = seed::rng(spec.seed);
        let count = Poisson::new(lambda).expect("positive rate").sample(&mut rng) as usize;
        for _ in 0..count {
            let t = rng.random_range(0.0..duration);
            let x = rng.random_range(0..g.width());
            let y = rng.random_range(0..g.height());
            let p = if rng.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative };
            tagged.push((Event::new(t, x, y, p), None));
        }
        tagged.sort_by(|a, b| a.0.t.total_cmp(&b.0.t));
    }
    let noise_flags = tagged.iter().map(|(_, o)| o.is_none()).collect();
    let origin = tagged.iter().map(|(_, o)| *o).collect();
    let events = tagged.into_iter().map(|(e, _)| e).collect();
    Injected {
        stream: EventStream::new(g, events).expect("noise stays in bounds"),
        noise_flags,
        origin,
    }
}

/// Perturbs timestamps with N(0, sigma), clips at 0 and re-sorts.
/// Returns the source index of each output event.
pub fn jitter_timestamps(stream: &EventStream, sigma: f64, seed: u64) -> (EventStream, Vec<usize>) {
    let mut rng = seed::rng(seed);
    let normal = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    let mut tagged: Vec<(Event, usize)> = stream
        .events()
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let t = if sigma > 0.0 { (e.t + normal.sample(&mut rng)).max(0.0) } else { e.t };
            (Event { t, ..e }, i)
        })
        .collect();
    tagged.sort_by(|a, b| a.0.t.total_cmp(&b.0.t));
    let origin = tagged.iter().map(|(_, i)| *i).collect();
    let events = tagged.into_iter().map(|(e, _)| e).collect();
    (
        EventStream::new(stream.geometry(), events).expect("jitter keeps bounds"),
        origin,
    )
}

/// A synthetic SAE window with per-cell ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarWindow {
    pub window: SaeWindow,
    /// Cells lying on the generating plane (within the fitting threshold).
    pub inliers: Vec<bool>,
    pub perturbed: Vec<bool>,
    pub normal: PlaneNormal,
}

/// `n`×`n` window whose cell at offset `(dx, dy)` from the centre holds the
/// time on `normal` at `(dx, dy)`, then perturbed per `mode`.
///
/// Scattered mode perturbs `round(scatter_fraction * n^2)` non-centre cells
/// (half-up rounding) and labels one an outlier when its perturbation puts
/// it at plane distance `>= inlier_eps`. Global mode perturbs every cell and
/// labels all of them inliers.
pub fn gen_planar_window(
    n: usize,
    normal: PlaneNormal,
    spec: &NoiseSpec,
    mode: NoiseMode,
    inlier_eps: f64,
) -> Result<PlanarWindow> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("window side {n} must be odd and >= 3")));
    }
    if normal.n3 == 0.0 {
        return Err(Error::InvalidParameter(
            "normal with n3 = 0 does not define t = f(x, y)".into(),
        ));
    }
    spec.validate()?;
    let h = (n / 2) as i64;
    let cells = n * n;
    let center = cells / 2;
    let mut times: Vec<f64> = (0..cells)
        .map(|i| {
            let (dx, dy) = ((i % n) as i64 - h, (i / n) as i64 - h);
            normal.time_at(dx as f64, dy as f64).expect("n3 != 0")
        })
        .collect();

    let mut rng = seed::rng(spec.seed);
    let noise = Normal::new(0.0, spec.timestamp_sigma).expect("finite sigma");
    let mut perturbed = vec![false; cells];
    match mode {
        NoiseMode::Global => perturbed.iter_mut().for_each(|p| *p = true),
        NoiseMode::Scattered => {
            let k = (spec.scatter_fraction * cells as f64 + 0.5).floor() as usize;
            let k = k.min(cells - 1);
            for j in index::sample(&mut rng, cells - 1, k) {
                perturbed[if j >= center { j + 1 } else { j }] = true;
            }
        }
    }
    let mut offsets = vec![0.0; cells];
    for i in 0..cells {
        if perturbed[i] && spec.timestamp_sigma > 0.0 {
            offsets[i] = noise.sample(&mut rng);
            times[i] = (times[i] + offsets[i]).max(0.0);
        }
    }

    // Distance of each perturbed cell from the true plane, in the fitting frame.
    let scaled = [normal.n1 / normal.n3, normal.n2 / normal.n3, 1.0];
    let norm_sq = scaled.iter().map(|v| v * v).sum::<f64>();
    let inliers = (0..cells)
        .map(|i| mode == NoiseMode::Global || (offsets[i].abs() / norm_sq) < inlier_eps)
        .collect();

    let center_time = times[center];
    let window = SaeWindow::new(
        (h as u32, h as u32),
        n,
        times.into_iter().map(Some).collect(),
        center_time,
    )?;
    Ok(PlanarWindow {
        window,
        inliers,
        perturbed,
        normal,
    })
}

/// True normal of a noiseless planar window, expressed in the fitting frame.
pub fn fitting_frame_normal(normal: &PlaneNormal) -> PlaneNormal {
    // Shifting time by (1/n3 - ANCHOR_TIME) and renormalising gives n / n3.
    let s = 1.0 / (normal.n3 * ANCHOR_TIME);
    PlaneNormal {
        n1: normal.n1 * s,
        n2: normal.n2 * s,
        n3: normal.n3 * s,
    }
}
