//! Edge images from lifetimed events, plus fixed-time and fixed-count
//! accumulation baselines. All renderers ignore polarity.

use crate::events::{EventStream, SensorGeometry};
use crate::image::{EdgeImage, GrayImage};
use crate::lifetime::LifetimedEvent;

pub const DEFAULT_TAU_CLAMP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderQuery {
    pub at_time: f64,
    /// Upper bound on how long any event stays alive, seconds.
    pub tau_clamp: f64,
}

impl RenderQuery {
    pub fn at(at_time: f64) -> Self {
        Self {
            at_time,
            tau_clamp: DEFAULT_TAU_CLAMP,
        }
    }
}

/// A pixel is on while one of its ok events is alive: `t <= at < t + min(tau, clamp)`.
pub fn render_lifetime(events: &[LifetimedEvent], q: &RenderQuery, geometry: SensorGeometry) -> EdgeImage {
    let mut img = EdgeImage::blank(geometry);
    for le in events.iter().take_while(|le| le.event.t <= q.at_time) {
        let Some(tau) = le.tau.filter(|_| le.is_ok()) else {
            continue;
        };
        let e = &le.event;
        if geometry.contains(e.x, e.y) && q.at_time < e.t + tau.min(q.tau_clamp) {
            img.set(e.x, e.y, true);
        }
    }
    img
}

/// Pixels with any event in `(at_time - window, at_time]`.
pub fn accumulate_time(stream: &EventStream, at_time: f64, window: f64, geometry: SensorGeometry) -> EdgeImage {
    let mut img = EdgeImage::blank(geometry);
    let events = stream.events();
    let end = events.partition_point(|e| e.t <= at_time);
    for e in events[..end].iter().rev().take_while(|e| e.t > at_time - window) {
        img.set(e.x, e.y, true);
    }
    img
}

/// Pixels hosting one of the last `count` events at or before `at_time`.
pub fn accumulate_count(stream: &EventStream, at_time: f64, count: usize, geometry: SensorGeometry) -> EdgeImage {
    let mut img = EdgeImage::blank(geometry);
    let events = stream.events();
    let end = events.partition_point(|e| e.t <= at_time);
    for e in &events[end.saturating_sub(count)..end] {
        img.set(e.x, e.y, true);
    }
    img
}

/// Time covered by the last `count` events at or before `at_time`.
pub fn count_window_span(stream: &EventStream, at_time: f64, count: usize) -> f64 {
    let events = stream.events();
    let end = events.partition_point(|e| e.t <= at_time);
    let start = end.saturating_sub(count);
    if end == start {
        return 0.0;
    }
    events[end - 1].t - events[start].t
}

/// Per-pixel mean lifetime of ok events, scaled linearly from `[lo, hi]`
/// to `[0, 255]`. Pixels without estimates stay 0.
pub fn lifetime_map(events: &[LifetimedEvent], geometry: SensorGeometry, lo: f64, hi: f64) -> GrayImage {
    let n = geometry.pixel_count();
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for le in events.iter().filter(|le| le.is_ok()) {
        if let Some(tau) = le.tau {
            if geometry.contains(le.event.x, le.event.y) {
                let i = geometry.index(le.event.x, le.event.y);
                sum[i] += tau;
                count[i] += 1;
            }
        }
    }
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let pixels = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| {
            if c == 0 {
                0
            } else {
                ((s / c as f64 - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
            }
        })
        .collect();
    GrayImage { geometry, pixels }
}

/// Mean number of on-pixels per row among rows with at least one.
pub fn mean_row_width(img: &EdgeImage) -> f64 {
    let g = img.geometry();
    let widths: Vec<usize> = (0..g.height())
        .map(|y| (0..g.width()).filter(|&x| img.get(x, y)).count())
        .filter(|&c| c > 0)
        .collect();
    if widths.is_empty() {
        0.0
    } else {
        widths.iter().sum::<usize>() as f64 / widths.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Event, Polarity};
    use crate::plane_fit::FitStatus;
    use crate::synth::{gen_stripes, StripeScene};

    fn geo() -> SensorGeometry {
        SensorGeometry::new(8, 8).unwrap()
    }

    fn lived(t: f64, x: u32, y: u32, tau: f64) -> LifetimedEvent {
        LifetimedEvent {
            event: Event::new(t, x, y, Polarity::Positive),
            source_index: 0,
            tau: Some(tau),
            vx: None,
            vy: None,
            status: FitStatus::Ok,
        }
    }

    #[test]
    fn lifetime_interval() {
        let ev = [lived(1.0, 3, 4, 0.01)];
        assert!(render_lifetime(&ev, &RenderQuery::at(1.005), geo()).get(3, 4));
        assert!(!render_lifetime(&ev, &RenderQuery::at(1.02), geo()).get(3, 4));
        assert_eq!(render_lifetime(&ev, &RenderQuery::at(0.5), geo()).count_on(), 0);
    }

    #[test]
    fn clamp_and_status() {
        let ev = [lived(1.0, 3, 4, 10.0)];
        assert!(!render_lifetime(&ev, &RenderQuery::at(1.6), geo()).get(3, 4));
        let mut bad = lived(1.0, 1, 1, 1.0);
        bad.status = FitStatus::Degenerate;
        assert_eq!(render_lifetime(&[bad], &RenderQuery::at(1.1), geo()).count_on(), 0);
    }

    fn stripes() -> EventStream {
        gen_stripes(&StripeScene::evenly_spaced(SensorGeometry::new(64, 4).unwrap(), 1, 0.0, 100.0, 0.6))
            .unwrap()
            .stream
    }

    #[test]
    fn time_window_monotone_and_bleeds() {
        let s = stripes();
        let g = s.geometry();
        let at = 0.2555;
        let short = accumulate_time(&s, at, 0.001, g);
        let long = accumulate_time(&s, at, 0.030, g);
        for (a, b) in short.mask().iter().zip(long.mask()) {
            assert!(!a || *b);
        }
        // v * w + 1 = 100 * 0.03 + 1 = 4 columns; the crossing grid makes it exactly 3 here.
        let w = mean_row_width(&long);
        assert!((3.0..=4.0).contains(&w), "{w}");
        assert_eq!(accumulate_time(&EventStream::empty(g), at, 0.03, g).count_on(), 0);
    }

    #[test]
    fn count_window() {
        let s = stripes();
        let g = s.geometry();
        assert_eq!(accumulate_count(&s, 0.1, 1, g).count_on(), 1);
        assert_eq!(accumulate_count(&s, -1.0, 1, g).count_on(), 0);
        assert_eq!(
            accumulate_count(&s, 10.0, s.len() + 5, g),
            accumulate_time(&s, 10.0, f64::INFINITY, g)
        );
    }

    #[test]
    fn lifetime_map_scales() {
        let ev = [lived(0.0, 0, 0, 0.01), lived(0.1, 0, 0, 0.03), lived(0.1, 1, 0, 0.5)];
        let img = lifetime_map(&ev, geo(), 0.0, 0.04);
        assert_eq!(img.pixels[0], 128);
        assert_eq!(img.pixels[1], 255);
        assert_eq!(img.pixels[2], 0);
    }
}
