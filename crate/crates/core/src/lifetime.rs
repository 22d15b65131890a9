//! Flow and lifetime from fitted plane normals, and the per-event pipeline.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::buffer_filter::{self, FilterParams};
use crate::error::{Error, Result};
use crate::events::{Event, EventStream, Polarity};
use crate::plane_fit::{ransac_fit, FitStatus, PlaneNormal, RansacParams};
use crate::sae::Sae;
use crate::seed::derive_seed;

/// Header of the lifetime CSV exchanged between pipeline stages.
pub const CSV_HEADER: &str = "t,x,y,p,tau,vx,vy,status";

/// One flow component; `Unbounded` when the plane is flat along that axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowComponent {
    Finite(f64),
    Unbounded,
}

impl FlowComponent {
    fn from_ratio(num: f64, den: f64) -> Self {
        if den == 0.0 {
            FlowComponent::Unbounded
        } else {
            FlowComponent::Finite(-num / den)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            FlowComponent::Finite(v) => Some(v),
            FlowComponent::Unbounded => None,
        }
    }
}

/// `(vx, vy) = (-n3/n1, -n3/n2)`.
pub fn flow_from_normal(n: &PlaneNormal) -> (FlowComponent, FlowComponent) {
    (
        FlowComponent::from_ratio(n.n3, n.n1),
        FlowComponent::from_ratio(n.n3, n.n2),
    )
}

/// SAE gradient magnitude `sqrt(n1^2 + n2^2) / |n3|`: the time the edge needs
/// to advance one pixel. `None` for vertical (`n3 = 0`) or flat planes.
pub fn lifetime_from_normal(n: &PlaneNormal) -> Option<f64> {
    let grad = n.n1.hypot(n.n2);
    if n.n3 == 0.0 || grad == 0.0 {
        return None;
    }
    let tau = grad / n.n3.abs();
    (tau.is_finite() && tau > 0.0).then_some(tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimedEvent {
    pub event: Event,
    /// Position of the event in the unfiltered input stream.
    pub source_index: usize,
    pub tau: Option<f64>,
    pub vx: Option<FlowComponent>,
    pub vy: Option<FlowComponent>,
    pub status: FitStatus,
}

impl LifetimedEvent {
    pub fn is_ok(&self) -> bool {
        self.status == FitStatus::Ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineParams {
    /// Pre-filter; `None` feeds every event to the fitter.
    pub filter: Option<FilterParams>,
    pub ransac: RansacParams,
    /// Worker threads for fitting; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl PipelineParams {
    pub fn new(filter: FilterParams, ransac: RansacParams) -> Self {
        Self {
            filter: Some(filter),
            ransac,
            threads: None,
        }
    }
}

/// Filters the stream, then fits every surviving event in order against the
/// SAE as it stood right after that event.
///
/// The RANSAC seed for the k-th surviving event is derived from
/// `(ransac.seed, k)`, so results do not depend on the thread count.
pub fn process_stream(stream: &EventStream, params: &PipelineParams) -> Result<Vec<LifetimedEvent>> {
    params.ransac.validate()?;
    let kept: Vec<usize> = match &params.filter {
        Some(f) => {
            f.validate()?;
            buffer_filter::surviving_indices(stream, f)
        }
        None => (0..stream.len()).collect(),
    };
    let events = stream.events();
    let mut sae = Sae::new(stream.geometry());
    let windows: Vec<_> = kept
        .iter()
        .map(|&i| {
            let e = &events[i];
            sae.update(e).expect("stream events are in bounds");
            sae.window(e, params.ransac.window_n)
        })
        .collect();

    let fit_one = |(k, window): (usize, &crate::sae::SaeWindow)| {
        let ransac = RansacParams {
            seed: derive_seed(params.ransac.seed, k as u64),
            ..params.ransac
        };
        let fit = ransac_fit(window, &ransac);
        let source_index = kept[k];
        let event = events[source_index];
        let mut out = LifetimedEvent {
            event,
            source_index,
            tau: None,
            vx: None,
            vy: None,
            status: fit.status,
        };
        if let (FitStatus::Ok, Some(n)) = (fit.status, fit.normal) {
            match lifetime_from_normal(&n) {
                Some(tau) => {
                    let (vx, vy) = flow_from_normal(&n);
                    out.tau = Some(tau);
                    out.vx = Some(vx);
                    out.vy = Some(vy);
                }
                None => out.status = FitStatus::Degenerate,
            }
        }
        out
    };

    let run = || -> Vec<LifetimedEvent> { windows.par_iter().enumerate().map(fit_one).collect() };
    Ok(match params.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    })
}

fn fmt_flow(out: &mut String, c: Option<FlowComponent>) {
    match c {
        Some(FlowComponent::Finite(v)) => write!(out, "{v}"),
        Some(FlowComponent::Unbounded) => write!(out, "inf"),
        None => Ok(()),
    }
    .expect("writing to a String");
}

pub fn write_lifetime_csv(events: &[LifetimedEvent]) -> String {
    let mut out = String::with_capacity(64 * (events.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for le in events {
        let e = &le.event;
        let _ = write!(out, "{},{},{},{},", e.t, e.x, e.y, e.p.as_bit());
        if let Some(tau) = le.tau {
            let _ = write!(out, "{tau}");
        }
        out.push(',');
        fmt_flow(&mut out, le.vx);
        out.push(',');
        fmt_flow(&mut out, le.vy);
        let _ = writeln!(out, ",{}", le.status);
    }
    out
}

/// Parses a lifetime CSV. `source_index` is set to the row position.
pub fn parse_lifetime_csv(text: &str) -> Result<Vec<LifetimedEvent>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::MalformedLine {
                line: 1,
                reason: format!("expected header {CSV_HEADER}"),
            })
        }
    }
    let mut out = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::MalformedLine {
            line: lineno + 1,
            reason: reason.into(),
        };
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 8 {
            return Err(bad("expected 8 columns"));
        }
        let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
        let opt_num = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s, what).map(Some)
            }
        };
        let flow = |s: &str, what: &str| -> Result<Option<FlowComponent>> {
            match s {
                "" => Ok(None),
                "inf" => Ok(Some(FlowComponent::Unbounded)),
                v => num(v, what).map(|v| Some(FlowComponent::Finite(v))),
            }
        };
        let event = Event::new(
            num(f[0], "bad t")?,
            f[1].parse().map_err(|_| bad("bad x"))?,
            f[2].parse().map_err(|_| bad("bad y"))?,
            f[3].parse::<u8>()
                .ok()
                .and_then(Polarity::from_bit)
                .ok_or_else(|| bad("bad polarity"))?,
        );
        out.push(LifetimedEvent {
            event,
            source_index: out.len(),
            tau: opt_num(f[4], "bad tau")?,
            vx: flow(f[5], "bad vx")?,
            vy: flow(f[6], "bad vy")?,
            status: f[7].parse().map_err(|_| bad("bad status"))?,
        });
    }
    Ok(out)
}
