//! Shared inputs for the benchmarks.

use evlife_core::synth::{gen_planar_window, gen_stripes, NoiseMode, NoiseSpec, StripeScene};
use evlife_core::*;

pub fn planar_window(sigma: f64, seed: u64) -> SaeWindow {
    let spec = NoiseSpec {
        timestamp_sigma: sigma,
        scatter_fraction: 0.2,
        seed,
        ..NoiseSpec::default()
    };
    let normal = PlaneNormal::new(-0.01, -0.003, 1.0).expect("valid normal");
    gen_planar_window(5, normal, &spec, NoiseMode::Scattered, 1e-3)
        .expect("valid window")
        .window
}

/// Noisy stripes on a `side`×`side` sensor.
pub fn stripes(side: u32, duration: f64) -> EventStream {
    let g = SensorGeometry::new(side, side).expect("positive side");
    let scene = StripeScene::evenly_spaced(g, 8, side as f64 / 8.0, 100.0, duration);
    gen_stripes(&scene)
        .expect("valid scene")
        .with_timestamp_jitter(0.0005, 1)
        .with_isolated_noise(&NoiseSpec { isolated_rate: 0.1, seed: 2, ..NoiseSpec::default() }, duration)
        .stream
}

/// A ring edge and the same ring shifted by one pixel.
pub fn edge_pair(side: u32) -> (EdgeImage, EdgeImage) {
    let g = SensorGeometry::new(side, side).expect("positive side");
    let (mut a, mut b) = (EdgeImage::blank(g), EdgeImage::blank(g));
    let c = side as f64 / 2.0;
    let r = side as f64 / 3.0;
    for k in 0..(8 * side) {
        let th = k as f64 / (8 * side) as f64 * std::f64::consts::TAU;
        let (x, y) = (c + r * th.cos(), c + r * th.sin());
        a.set(x as u32, y as u32, true);
        b.set((x + 1.0).min(side as f64 - 1.0) as u32, y as u32, true);
    }
    (a, b)
}
