//! Quantitative evaluation: inlier F-measure, lifetime error statistics,
//! lifetime histograms and edge-map similarity.

pub mod cdm;
pub mod fig4;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::events::EventKey;
use crate::lifetime::LifetimedEvent;
use crate::synth::Labeled;

pub use cdm::{cdm, CdmParams, CdmReport};
pub use fig4::{sweep_fig4, Fig4Config, Fig4Row};

pub const DEFAULT_BIN_WIDTH: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FMeasure {
    pub recall: f64,
    pub precision: f64,
    pub f: f64,
}

/// Recall, precision and their harmonic mean for a predicted inlier set.
pub fn f_measure(predicted: &[bool], truth: &[bool]) -> FMeasure {
    assert_eq!(predicted.len(), truth.len(), "masks must have the same shape");
    let (mut tp, mut fp, mut fnn) = (0usize, 0usize, 0usize);
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fnn += 1,
            (false, false) => {}
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let recall = ratio(tp, tp + fnn);
    let precision = ratio(tp, tp + fp);
    let f = if recall + precision == 0.0 {
        0.0
    } else {
        2.0 * recall * precision / (recall + precision)
    };
    FMeasure { recall, precision, f }
}

/// Ground-truth lifetime per event identity; noise events are left out.
pub fn truth_map(labeled: &Labeled) -> HashMap<EventKey, f64> {
    labeled
        .stream
        .events()
        .iter()
        .zip(&labeled.lifetime)
        .filter_map(|(e, l)| l.map(|l| (e.key(), l)))
        .collect()
}

/// Histogram of lifetime estimates with bins `[k * width, (k + 1) * width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub bins: BTreeMap<u64, usize>,
}

impl Histogram {
    pub fn new(bin_width: f64) -> Self {
        Self {
            bin_width,
            bins: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, value: f64) {
        let k = (value / self.bin_width).floor().max(0.0) as u64;
        *self.bins.entry(k).or_default() += 1;
    }

    pub fn total(&self) -> usize {
        self.bins.values().sum()
    }

    /// `bin_start,bin_end,count`, one row per non-empty bin. Edges are
    /// rounded to 12 decimals so `3 * 0.001` prints as `0.003`.
    pub fn to_csv(&self) -> String {
        let edge = |k: u64| (k as f64 * self.bin_width * 1e12).round() / 1e12;
        let mut out = String::from("bin_start,bin_end,count\n");
        for (&k, &c) in &self.bins {
            let _ = writeln!(out, "{},{},{}", edge(k), edge(k + 1), c);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeStats {
    pub scored: usize,
    pub mean_abs_error: f64,
    pub histogram: Histogram,
}

/// Mean absolute lifetime error over ok estimates, plus their histogram.
pub fn lifetime_stats(
    estimates: &[LifetimedEvent],
    truth: &HashMap<EventKey, f64>,
    bin_width: f64,
) -> Result<LifetimeStats> {
    if !(bin_width > 0.0) {
        return Err(Error::InvalidParameter("bin width must be positive".into()));
    }
    let mut histogram = Histogram::new(bin_width);
    let mut sum = 0.0;
    let mut scored = 0usize;
    for le in estimates.iter().filter(|le| le.is_ok()) {
        let Some(tau) = le.tau else { continue };
        let e = &le.event;
        let expected = truth
            .get(&e.key())
            .ok_or(Error::MissingTruth { t: e.t, x: e.x, y: e.y })?;
        sum += (tau - expected).abs();
        scored += 1;
        histogram.add(tau);
    }
    Ok(LifetimeStats {
        scored,
        mean_abs_error: if scored == 0 { 0.0 } else { sum / scored as f64 },
        histogram,
    })
}

/// Fraction of scored estimates within `rel_tol` of their true lifetime.
/// Estimates without a truth entry (injected noise) are skipped.
pub fn peak_mass(
    estimates: &[LifetimedEvent],
    truth: &HashMap<EventKey, f64>,
    rel_tol: f64,
    mut include: impl FnMut(&LifetimedEvent) -> bool,
) -> (f64, usize) {
    let mut hits = 0usize;
    let mut total = 0usize;
    for le in estimates.iter().filter(|le| le.is_ok() && include(le)) {
        let (Some(tau), Some(&expected)) = (le.tau, truth.get(&le.event.key())) else {
            continue;
        };
        total += 1;
        if (tau - expected).abs() <= rel_tol * expected {
            hits += 1;
        }
    }
    (if total == 0 { 0.0 } else { hits as f64 / total as f64 }, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Event, Polarity};
    use crate::plane_fit::FitStatus;
    use proptest::prelude::*;

    #[test]
    fn f_measure_examples() {
        let t = [true, true, false, true];
        assert_eq!(f_measure(&t, &t).f, 1.0);
        let none = f_measure(&[false; 4], &t);
        assert_eq!((none.recall, none.f), (0.0, 0.0));
        // TP=2, FP=1, FN=2
        let pred = [true, true, true, false, false];
        let truth = [true, true, false, true, true];
        let m = f_measure(&pred, &truth);
        assert!((m.recall - 0.5).abs() < 1e-15);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.f - 4.0 / 7.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn f_measure_matches_confusion_counts(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
            let pred: Vec<bool> = pairs.iter().map(|p| p.0).collect();
            let truth: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            let tp = pairs.iter().filter(|p| p.0 && p.1).count() as f64;
            let fp = pairs.iter().filter(|p| p.0 && !p.1).count() as f64;
            let fnn = pairs.iter().filter(|p| !p.0 && p.1).count() as f64;
            let m = f_measure(&pred, &truth);
            // F = 2TP / (2TP + FP + FN) whenever TP > 0.
            let expect = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fnn) };
            prop_assert!((m.f - expect).abs() < 1e-12);
        }
    }

    fn est(t: f64, tau: f64) -> LifetimedEvent {
        LifetimedEvent {
            event: Event::new(t, 1, 1, Polarity::Positive),
            source_index: 0,
            tau: Some(tau),
            vx: None,
            vy: None,
            status: FitStatus::Ok,
        }
    }

    #[test]
    fn stats_examples() {
        let ests: Vec<_> = (0..5).map(|i| est(i as f64, 0.012)).collect();
        let truth: HashMap<_, _> = ests.iter().map(|e| (e.event.key(), 0.01)).collect();
        let s = lifetime_stats(&ests, &truth, DEFAULT_BIN_WIDTH).unwrap();
        assert_eq!(s.scored, 5);
        assert!((s.mean_abs_error - 0.002).abs() < 1e-15);
        assert_eq!(s.histogram.bins.get(&12), Some(&5));

        let exact: HashMap<_, _> = ests.iter().map(|e| (e.event.key(), 0.012)).collect();
        assert_eq!(lifetime_stats(&ests, &exact, 0.001).unwrap().mean_abs_error, 0.0);

        let mut partial = truth.clone();
        partial.remove(&ests[2].event.key());
        assert!(matches!(lifetime_stats(&ests, &partial, 0.001), Err(Error::MissingTruth { .. })));
    }

    #[test]
    fn histogram_csv() {
        let mut h = Histogram::new(0.5);
        h.add(0.2);
        h.add(1.1);
        h.add(1.4);
        assert_eq!(h.to_csv(), "bin_start,bin_end,count\n0,0.5,1\n1,1.5,2\n");
        assert_eq!(h.total(), 3);
        let mut fine = Histogram::new(0.001);
        fine.add(0.0095);
        assert_eq!(fine.to_csv(), "bin_start,bin_end,count\n0.009,0.01,1\n");
    }
}
