//! Robust local plane fitting on an SAE window.
//!
//! A candidate set is selected by two-cluster k-means on the window
//! timestamps, then RANSAC draws the current event plus two other candidates,
//! solves for the plane `n1*x + n2*y + n3*t = 1` through them, and scores it
//! by how many candidates lie within `inlier_eps` of the plane when each
//! pixel may float anywhere inside a `delta`-box around its centre.
//!
//! Points are expressed in a window-local frame: `(dx, dy)` are pixel
//! offsets from the current event and time is `t - center_time + 1` seconds,
//! so every plane through the current event has `n3 = 1` at the anchor and
//! the frame never depends on absolute stream time.

mod kmeans;

pub use kmeans::kmeans_partition;

use rand::Rng;

use crate::error::{Error, Result};
use crate::sae::{SaeWindow, DEFAULT_WINDOW};
use crate::seed;

/// Time coordinate of the current event in the fitting frame.
pub const ANCHOR_TIME: f64 = 1.0;

pub const DEFAULT_DELTA: f64 = 0.25;
pub const DEFAULT_INLIER_EPS: f64 = 1e-3;
pub const DEFAULT_ITERATIONS: usize = 100;
pub const DEFAULT_MIN_INLIERS: usize = 3;

/// Attempts per RANSAC iteration before a singular draw counts as a failure.
const MAX_REDRAWS: usize = 10;

/// Normal of the plane `n1*x + n2*y + n3*t = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneNormal {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
}

impl PlaneNormal {
    pub fn new(n1: f64, n2: f64, n3: f64) -> Result<Self> {
        if !(n1.is_finite() && n2.is_finite() && n3.is_finite()) || (n1, n2, n3) == (0.0, 0.0, 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid plane normal ({n1}, {n2}, {n3})"
            )));
        }
        Ok(Self { n1, n2, n3 })
    }

    pub fn dot(&self, p: [f64; 3]) -> f64 {
        self.n1 * p[0] + self.n2 * p[1] + self.n3 * p[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.n1 * self.n1 + self.n2 * self.n2 + self.n3 * self.n3
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.n1, self.n2, self.n3]
    }

    /// `t` on the plane at `(x, y)`, if the plane is not vertical.
    pub fn time_at(&self, x: f64, y: f64) -> Option<f64> {
        (self.n3 != 0.0).then(|| (1.0 - self.n1 * x - self.n2 * y) / self.n3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub window_n: usize,
    /// Half-side of the intra-pixel box, in pixels.
    pub delta: f64,
    pub inlier_eps: f64,
    pub iterations: usize,
    /// Inliers required besides the current event.
    pub min_inliers: usize,
    pub seed: u64,
    /// Score every candidate pair instead of drawing `iterations` samples.
    pub exhaustive: bool,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            window_n: DEFAULT_WINDOW,
            delta: DEFAULT_DELTA,
            inlier_eps: DEFAULT_INLIER_EPS,
            iterations: DEFAULT_ITERATIONS,
            min_inliers: DEFAULT_MIN_INLIERS,
            seed: 0,
            exhaustive: false,
        }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "window size {} must be odd",
                self.window_n
            )));
        }
        if !(0.0..0.5).contains(&self.delta) {
            return Err(Error::InvalidParameter(format!(
                "delta {} must lie in [0, 0.5)",
                self.delta
            )));
        }
        if !(self.inlier_eps > 0.0) {
            return Err(Error::InvalidParameter("inlier_eps must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitStatus {
    Ok,
    Degenerate,
    InsufficientSupport,
}

impl FitStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FitStatus::Ok => "ok",
            FitStatus::Degenerate => "degenerate",
            FitStatus::InsufficientSupport => "insufficient-support",
        }
    }
}

impl std::fmt::Display for FitStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FitStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(FitStatus::Ok),
            "degenerate" => Ok(FitStatus::Degenerate),
            "insufficient-support" => Ok(FitStatus::InsufficientSupport),
            other => Err(Error::InvalidParameter(format!("unknown fit status {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Best plane found, in the window-local frame.
    pub normal: Option<PlaneNormal>,
    pub inlier_mask: Vec<bool>,
    pub inlier_count: usize,
    pub candidate_mask: Vec<bool>,
    pub status: FitStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Degenerate;

/// Solves `n . p_i = 1` for the three points.
pub fn plane_from_three_points(
    p1: [f64; 3],
    p2: [f64; 3],
    p3: [f64; 3],
) -> std::result::Result<PlaneNormal, Degenerate> {
    let det = det3(p1, p2, p3);
    let scale = norm(p1) * norm(p2) * norm(p3);
    if !det.is_finite() || scale == 0.0 || det.abs() <= 1e-12 * scale {
        return Err(Degenerate);
    }
    // Cramer's rule with the right-hand side (1, 1, 1).
    let ones = [1.0, 1.0, 1.0];
    let col = |k: usize| -> f64 {
        let mut rows = [p1, p2, p3];
        for (row, one) in rows.iter_mut().zip(ones) {
            row[k] = one;
        }
        det3(rows[0], rows[1], rows[2]) / det
    };
    PlaneNormal::new(col(0), col(1), col(2)).map_err(|_| Degenerate)
}

fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

fn norm(p: [f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Smallest plane distance `|n.z - 1| / |n|^2` over points `z` whose spatial
/// part lies in the `delta`-box around `(x, y)`.
///
/// The residual is affine in the spatial coordinates, so the box can shift
/// it by at most `delta * (|n1| + |n2|)`.
pub fn intra_pixel_distance(normal: &PlaneNormal, x: f64, y: f64, t: f64, delta: f64) -> f64 {
    let residual = normal.dot([x, y, t]) - 1.0;
    let slack = delta * (normal.n1.abs() + normal.n2.abs());
    (residual.abs() - slack).max(0.0) / normal.norm_sq()
}

/// Window cells in the fitting frame. Never-fired cells map to `None`.
pub fn window_points(window: &SaeWindow) -> Vec<Option<[f64; 3]>> {
    let tc = window.center_time();
    window
        .timestamps()
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            cell.map(|t| {
                let (dx, dy) = window.offset(i);
                [dx as f64, dy as f64, t - tc + ANCHOR_TIME]
            })
        })
        .collect()
}

/// Candidate cells: the centre's k-means cluster, restricted to pixels that fired.
pub fn candidate_mask(window: &SaeWindow) -> Vec<bool> {
    kmeans_partition(window)
        .into_iter()
        .zip(window.timestamps())
        .map(|(m, c)| m && c.is_some())
        .collect()
}

struct Scorer<'a> {
    points: &'a [(usize, [f64; 3])],
    delta: f64,
    eps: f64,
}

impl Scorer<'_> {
    /// Inlier count, and the summed point-to-plane distance of the inliers
    /// (pixel centres, no box) used to break ties between equal counts.
    fn score(&self, normal: &PlaneNormal) -> (usize, f64) {
        let mut count = 0;
        let mut spread = 0.0;
        for (_, p) in self.points {
            let d = intra_pixel_distance(normal, p[0], p[1], p[2], self.delta);
            if d < self.eps {
                count += 1;
                spread += intra_pixel_distance(normal, p[0], p[1], p[2], 0.0);
            }
        }
        (count, spread)
    }
}

/// RANSAC plane fit around the window centre.
pub fn ransac_fit(window: &SaeWindow, params: &RansacParams) -> FitResult {
    let cells = window.len();
    let candidates = candidate_mask(window);
    let points = window_points(window);
    let center = window.center_index();
    let candidate_points: Vec<(usize, [f64; 3])> = (0..cells)
        .filter(|&i| candidates[i])
        .map(|i| (i, points[i].expect("candidates have fired")))
        .collect();
    let others: Vec<[f64; 3]> = candidate_points
        .iter()
        .filter(|(i, _)| *i != center)
        .map(|&(_, p)| p)
        .collect();

    let fail = |status| FitResult {
        normal: None,
        inlier_mask: vec![false; cells],
        inlier_count: 0,
        candidate_mask: candidates.clone(),
        status,
    };
    if candidate_points.len() < 3 || others.len() < 2 {
        return fail(FitStatus::InsufficientSupport);
    }

    let anchor = points[center].expect("centre always fired");
    let scorer = Scorer {
        points: &candidate_points,
        delta: params.delta,
        eps: params.inlier_eps,
    };
    let mut best: Option<(usize, f64, PlaneNormal)> = None;
    let mut consider = |normal: PlaneNormal| {
        let (score, spread) = scorer.score(&normal);
        if best.is_none_or(|(s, sp, _)| score > s || (score == s && spread < sp)) {
            best = Some((score, spread, normal));
        }
    };

    if params.exhaustive {
        for a in 0..others.len() {
            for b in a + 1..others.len() {
                if let Ok(n) = plane_from_three_points(anchor, others[a], others[b]) {
                    consider(n);
                }
            }
        }
    } else {
        let mut rng = seed::rng(params.seed);
        let m = others.len();
        for _ in 0..params.iterations {
            for _ in 0..MAX_REDRAWS {
                let a = rng.random_range(0..m);
                let mut b = rng.random_range(0..m - 1);
                if b >= a {
                    b += 1;
                }
                if let Ok(n) = plane_from_three_points(anchor, others[a], others[b]) {
                    consider(n);
                    break;
                }
            }
        }
    }

    let Some((score, _, normal)) = best else {
        return fail(FitStatus::Degenerate);
    };
    let mut inlier_mask = vec![false; cells];
    for &(i, p) in &candidate_points {
        inlier_mask[i] = intra_pixel_distance(&normal, p[0], p[1], p[2], params.delta) < params.inlier_eps;
    }
    let status = if score < params.min_inliers + 1 {
        FitStatus::InsufficientSupport
    } else {
        FitStatus::Ok
    };
    FitResult {
        normal: Some(normal),
        inlier_mask,
        inlier_count: score,
        candidate_mask: candidates,
        status,
    }
}
