//! Two-cluster 1-D k-means used to separate recent SAE pixels from stale ones.

use crate::sae::SaeWindow;

pub const MAX_ITERATIONS: usize = 50;

/// Lloyd's algorithm with k = 2 seeded at `(min, center_time)`.
///
/// Never-fired cells take part as timestamp 0. Returns the mask of the
/// cluster containing the centre cell. Assignment ties go to the recent
/// (larger) centroid.
pub fn kmeans_partition(window: &SaeWindow) -> Vec<bool> {
    let values: Vec<f64> = window
        .timestamps()
        .iter()
        .map(|c| c.unwrap_or(0.0))
        .collect();
    let labels = two_means(&values, window.center_time());
    let center_label = labels[window.center_index()];
    labels.iter().map(|&l| l == center_label).collect()
}

/// Returns `true` for members of the high cluster.
pub(crate) fn two_means(values: &[f64], high_init: f64) -> Vec<bool> {
    let mut low = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut high = high_init;
    let mut labels: Vec<bool> = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let next: Vec<bool> = values
            .iter()
            .map(|&v| (v - low).abs() >= (v - high).abs())
            .collect();
        if next == labels {
            break;
        }
        labels = next;
        let (mut sum_lo, mut n_lo, mut sum_hi, mut n_hi) = (0.0, 0usize, 0.0, 0usize);
        for (&v, &is_high) in values.iter().zip(&labels) {
            if is_high {
                sum_hi += v;
                n_hi += 1;
            } else {
                sum_lo += v;
                n_lo += 1;
            }
        }
        // An empty cluster keeps its previous centroid.
        if n_lo > 0 {
            low = sum_lo / n_lo as f64;
        }
        if n_hi > 0 {
            high = sum_hi / n_hi as f64;
        }
    }
    labels
}
