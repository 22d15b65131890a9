#![allow(dead_code)]

use evlife_core::eval::cdm::chessboard;
use evlife_core::{EdgeImage, SensorGeometry};
use pathfinding::prelude::{kuhn_munkres, Matrix};
use rand::Rng;

pub fn random_mask(rng: &mut impl Rng, w: u32, h: u32, density: f64) -> EdgeImage {
    let g = SensorGeometry::new(w, h).unwrap();
    let mask = (0..g.pixel_count()).map(|_| rng.random_bool(density)).collect();
    EdgeImage::from_mask(g, mask).unwrap()
}

/// Minimum-cost one-to-one matching score via the Hungarian method.
pub fn optimal_cdm(f: &EdgeImage, g: &EdgeImage, eta: u32) -> f64 {
    let fp = f.on_pixels();
    let gp = g.on_pixels();
    let union = f.mask().iter().zip(g.mask()).filter(|(a, b)| **a || **b).count();
    if union == 0 {
        return 100.0;
    }
    let n = fp.len().max(gp.len());
    // A matched pair saves 2 - d/eta against leaving both pixels unmatched; scaled by eta.
    let scale = eta.max(1) as i64;
    let weights = Matrix::from_fn(n, n, |(i, j)| {
        if i >= fp.len() || j >= gp.len() {
            return 0i64;
        }
        let d = chessboard(fp[i], gp[j]);
        if d > eta {
            0
        } else {
            2 * scale - d as i64
        }
    });
    let (saved, _) = kuhn_munkres(&weights);
    let cost = (fp.len() + gp.len()) as f64 - saved as f64 / scale as f64;
    (100.0 * (1.0 - cost / union as f64)).clamp(0.0, 100.0)
}
