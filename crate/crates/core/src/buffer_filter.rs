//! Event-buffer pre-filter: drops events with no same-polarity support in
//! the 8-connected neighbourhood within a short time window.

use crate::error::{Error, Result};
use crate::events::{Event, EventStream, Polarity};

pub const DEFAULT_TAU_MIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// Support window `[t - tau_min, t]`; zero latency.
    CausalPast,
    /// Support window `[t - tau_min, t + tau_min]`; output lags by `tau_min`.
    SymmetricDelayed,
}

impl std::str::FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "causal" | "causal-past" => Ok(FilterMode::CausalPast),
            "symmetric" | "symmetric-delayed" => Ok(FilterMode::SymmetricDelayed),
            other => Err(Error::InvalidParameter(format!("unknown filter mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub tau_min: f64,
    pub mode: FilterMode,
    pub radius: u32,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            tau_min: DEFAULT_TAU_MIN,
            mode: FilterMode::SymmetricDelayed,
            radius: 1,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau_min must be positive, got {}",
                self.tau_min
            )));
        }
        if self.radius == 0 {
            return Err(Error::InvalidParameter("filter radius must be >= 1".into()));
        }
        Ok(())
    }
}

/// Indices of the events that survive the filter, ascending.
pub fn surviving_indices(stream: &EventStream, params: &FilterParams) -> Vec<usize> {
    let events = stream.events();
    let geometry = stream.geometry();
    let n_px = geometry.pixel_count();
    let r = params.radius as i64;
    let (w, h) = (geometry.width() as i64, geometry.height() as i64);

    // Latest earlier-index time per (polarity, pixel), then earliest later-index time.
    let mut support = vec![false; events.len()];
    let mut last = [vec![f64::NEG_INFINITY; n_px], vec![f64::NEG_INFINITY; n_px]];
    for (i, e) in events.iter().enumerate() {
        let surface = &last[e.p.index()];
        support[i] = any_neighbour(e, r, w, h, |j| surface[j] >= e.t - params.tau_min);
        let k = geometry.index(e.x, e.y);
        last[e.p.index()][k] = e.t;
    }
    if params.mode == FilterMode::SymmetricDelayed {
        let mut next = [vec![f64::INFINITY; n_px], vec![f64::INFINITY; n_px]];
        for (i, e) in events.iter().enumerate().rev() {
            if !support[i] {
                let surface = &next[e.p.index()];
                support[i] = any_neighbour(e, r, w, h, |j| surface[j] <= e.t + params.tau_min);
            }
            let k = geometry.index(e.x, e.y);
            next[e.p.index()][k] = e.t;
        }
    }
    support
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| s.then_some(i))
        .collect()
}

fn any_neighbour(e: &Event, r: i64, w: i64, h: i64, mut hit: impl FnMut(usize) -> bool) -> bool {
    for dy in -r..=r {
        let y = e.y as i64 + dy;
        if y < 0 || y >= h {
            continue;
        }
        for dx in -r..=r {
            let x = e.x as i64 + dx;
            if (dx == 0 && dy == 0) || x < 0 || x >= w {
                continue;
            }
            if hit((y * w + x) as usize) {
                return true;
            }
        }
    }
    false
}

/// Filters a stream; survivors keep their timestamps and relative order.
pub fn filter(stream: &EventStream, params: &FilterParams) -> EventStream {
    let events = stream.events();
    let kept = surviving_indices(stream, params)
        .into_iter()
        .map(|i| events[i])
        .collect();
    EventStream::new(stream.geometry(), kept).expect("subsequence of a valid stream")
}

/// Convenience for counting survivors per polarity in reports.
pub fn polarity_counts(stream: &EventStream) -> (usize, usize) {
    let pos = stream
        .events()
        .iter()
        .filter(|e| e.p == Polarity::Positive)
        .count();
    (pos, stream.len() - pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::SensorGeometry;
    use proptest::prelude::*;

    fn geo() -> SensorGeometry {
        SensorGeometry::new(10, 10).unwrap()
    }

    fn params(mode: FilterMode) -> FilterParams {
        FilterParams {
            tau_min: 0.01,
            mode,
            radius: 1,
        }
    }

    #[test]
    fn isolated_event_removed() {
        let s = EventStream::new(geo(), vec![Event::new(0.1, 5, 5, Polarity::Positive)]).unwrap();
        for mode in [FilterMode::CausalPast, FilterMode::SymmetricDelayed] {
            assert!(filter(&s, &params(mode)).is_empty());
        }
    }

    #[test]
    fn adjacent_pair_half_window() {
        let s = EventStream::new(
            geo(),
            vec![
                Event::new(0.100, 5, 5, Polarity::Positive),
                Event::new(0.105, 6, 5, Polarity::Positive),
            ],
        )
        .unwrap();
        assert_eq!(surviving_indices(&s, &params(FilterMode::CausalPast)), vec![1]);
        assert_eq!(surviving_indices(&s, &params(FilterMode::SymmetricDelayed)), vec![0, 1]);
    }

    #[test]
    fn own_pixel_and_other_polarity_do_not_support() {
        let s = EventStream::new(
            geo(),
            vec![
                Event::new(0.100, 5, 5, Polarity::Positive),
                Event::new(0.101, 5, 5, Polarity::Positive),
                Event::new(0.102, 6, 6, Polarity::Negative),
            ],
        )
        .unwrap();
        assert!(filter(&s, &params(FilterMode::SymmetricDelayed)).is_empty());
    }

    #[test]
    fn outside_window_not_supported() {
        let s = EventStream::new(
            geo(),
            vec![
                Event::new(0.100, 5, 5, Polarity::Positive),
                Event::new(0.120, 6, 5, Polarity::Positive),
            ],
        )
        .unwrap();
        assert!(filter(&s, &params(FilterMode::SymmetricDelayed)).is_empty());
    }

    #[test]
    fn invalid_params() {
        assert!(FilterParams { tau_min: 0.0, ..Default::default() }.validate().is_err());
        assert!(FilterParams::default().validate().is_ok());
        assert_eq!("causal".parse::<FilterMode>().unwrap(), FilterMode::CausalPast);
        assert!("both".parse::<FilterMode>().is_err());
    }

    fn arb_stream() -> impl Strategy<Value = EventStream> {
        prop::collection::vec((0.0f64..0.2, 0u32..6, 0u32..6, any::<bool>()), 0..80).prop_map(|mut raw| {
            raw.sort_by(|a, b| a.0.total_cmp(&b.0));
            let events = raw
                .into_iter()
                .map(|(t, x, y, p)| Event::new(t, x, y, if p { Polarity::Positive } else { Polarity::Negative }))
                .collect();
            EventStream::new(SensorGeometry::new(6, 6).unwrap(), events).unwrap()
        })
    }

    /// Direct O(n^2) statement of the survival predicate.
    fn naive(stream: &EventStream, p: &FilterParams) -> Vec<usize> {
        let ev = stream.events();
        (0..ev.len())
            .filter(|&i| {
                let e = ev[i];
                ev.iter().enumerate().any(|(j, o)| {
                    let adjacent = (o.x as i64 - e.x as i64).abs() <= 1
                        && (o.y as i64 - e.y as i64).abs() <= 1
                        && (o.x, o.y) != (e.x, e.y);
                    let in_window = match p.mode {
                        FilterMode::CausalPast => j < i && o.t >= e.t - p.tau_min,
                        FilterMode::SymmetricDelayed => (o.t - e.t).abs() <= p.tau_min,
                    };
                    j != i && o.p == e.p && adjacent && in_window
                })
            })
            .collect()
    }

    proptest! {
        #[test]
        fn matches_naive_predicate(s in arb_stream(), tau in 0.001f64..0.1, sym in any::<bool>()) {
            let mode = if sym { FilterMode::SymmetricDelayed } else { FilterMode::CausalPast };
            let p = FilterParams { tau_min: tau, mode, radius: 1 };
            prop_assert_eq!(surviving_indices(&s, &p), naive(&s, &p));
        }

        #[test]
        fn monotone_in_tau(s in arb_stream(), tau in 0.001f64..0.05, extra in 0.0f64..0.05, sym in any::<bool>()) {
            let mode = if sym { FilterMode::SymmetricDelayed } else { FilterMode::CausalPast };
            let small = surviving_indices(&s, &FilterParams { tau_min: tau, mode, radius: 1 });
            let large = surviving_indices(&s, &FilterParams { tau_min: tau + extra, mode, radius: 1 });
            prop_assert!(small.iter().all(|i| large.contains(i)));
        }

        #[test]
        fn output_is_subsequence(s in arb_stream()) {
            let out = filter(&s, &FilterParams::default());
            let mut it = s.events().iter();
            for e in out.events() {
                prop_assert!(it.any(|o| o == e));
            }
        }

        #[test]
        fn infinite_window_keeps_non_isolated(s in arb_stream()) {
            let p = FilterParams { tau_min: 1e9, mode: FilterMode::SymmetricDelayed, radius: 1 };
            let kept = surviving_indices(&s, &p);
            let ev = s.events();
            for (i, e) in ev.iter().enumerate() {
                let has_pair = ev.iter().any(|o| o.p == e.p && (o.x, o.y) != (e.x, e.y)
                    && (o.x as i64 - e.x as i64).abs() <= 1 && (o.y as i64 - e.y as i64).abs() <= 1);
                prop_assert_eq!(kept.contains(&i), has_pair);
            }
        }
    }
}
