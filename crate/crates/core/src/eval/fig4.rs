//! Monte-Carlo sweep over noise level and intra-pixel radius on synthetic
//! planar windows: inlier F-measure and lifetime error, averaged over
//! seeded repetitions.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lifetime::lifetime_from_normal;
use crate::plane_fit::{ransac_fit, FitStatus, PlaneNormal, RansacParams};
use crate::seed::derive_seed;
use crate::synth::{gen_planar_window, NoiseMode, NoiseSpec};

use super::f_measure;

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Config {
    pub mode: NoiseMode,
    /// Generating plane, `n1*x + n2*y + n3*t = 1` with the window centre at the origin.
    pub normal: PlaneNormal,
    pub window_n: usize,
    pub sigmas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
    /// Fraction of pixels perturbed in scattered mode.
    pub scatter_fraction: f64,
    /// Fitting parameters; `delta` and `seed` are overridden per grid point.
    pub ransac: RansacParams,
}

impl Fig4Config {
    /// A vertical edge moving at 100 px/s with a slight tilt.
    pub fn default_normal() -> PlaneNormal {
        PlaneNormal {
            n1: -0.01,
            n2: -0.003,
            n3: 1.0,
        }
    }

    pub fn global(sigmas: Vec<f64>) -> Self {
        Self {
            mode: NoiseMode::Global,
            normal: Self::default_normal(),
            window_n: 5,
            sigmas,
            deltas: vec![0.0, 0.25],
            repetitions: 1000,
            seed: 0,
            scatter_fraction: 0.0,
            ransac: RansacParams::default(),
        }
    }

    pub fn scattered(sigma: f64, deltas: Vec<f64>) -> Self {
        Self {
            mode: NoiseMode::Scattered,
            sigmas: vec![sigma],
            deltas,
            scatter_fraction: 0.2,
            ..Self::global(Vec::new())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig4Row {
    pub sigma: f64,
    pub delta: f64,
    pub mean_recall: f64,
    pub mean_precision: f64,
    pub mean_f: f64,
    /// Mean |tau_est - tau_true| over repetitions whose fit succeeded.
    pub mean_lifetime_error: f64,
    pub ok_fits: usize,
    pub repetitions: usize,
}

#[derive(Clone, Copy, Default)]
struct Sample {
    recall: f64,
    precision: f64,
    f: f64,
    lifetime_error: Option<f64>,
}

/// Runs the sweep; one row per `(sigma, delta)` in sigma-major order.
///
/// Repetition `r` uses window seed `seed + r` and RANSAC seed
/// `derive_seed(seed, r)` at every grid point, so deltas are compared on
/// identical data and identical draws.
pub fn sweep_fig4(config: &Fig4Config) -> Result<Vec<Fig4Row>> {
    if config.repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
    }
    for &delta in &config.deltas {
        RansacParams { delta, ..config.ransac }.validate()?;
    }
    let tau_true = lifetime_from_normal(&config.normal)
        .ok_or_else(|| Error::InvalidParameter("generating plane has no lifetime".into()))?;
    let eps = config.ransac.inlier_eps;

    let mut rows = Vec::with_capacity(config.sigmas.len() * config.deltas.len());
    for &sigma in &config.sigmas {
        let per_rep: Vec<Vec<Sample>> = (0..config.repetitions)
            .into_par_iter()
            .map(|r| -> Result<Vec<Sample>> {
                let spec = NoiseSpec {
                    isolated_rate: 0.0,
                    timestamp_sigma: sigma,
                    scatter_fraction: config.scatter_fraction,
                    seed: config.seed.wrapping_add(r as u64),
                };
                let pw = gen_planar_window(config.window_n, config.normal, &spec, config.mode, eps)?;
                Ok(config
                    .deltas
                    .iter()
                    .map(|&delta| {
                        let params = RansacParams {
                            delta,
                            seed: derive_seed(config.seed, r as u64),
                            window_n: config.window_n,
                            ..config.ransac
                        };
                        let fit = ransac_fit(&pw.window, &params);
                        // Score only the pixels the fitter was allowed to consider.
                        let truth: Vec<bool> = pw
                            .inliers
                            .iter()
                            .zip(&fit.candidate_mask)
                            .map(|(&t, &c)| t && c)
                            .collect();
                        let predicted = if fit.status == FitStatus::Ok {
                            fit.inlier_mask.clone()
                        } else {
                            vec![false; truth.len()]
                        };
                        let m = f_measure(&predicted, &truth);
                        let lifetime_error = (fit.status == FitStatus::Ok)
                            .then(|| fit.normal.and_then(|n| lifetime_from_normal(&n)))
                            .flatten()
                            .map(|tau| (tau - tau_true).abs());
                        Sample {
                            recall: m.recall,
                            precision: m.precision,
                            f: m.f,
                            lifetime_error,
                        }
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;

        for (k, &delta) in config.deltas.iter().enumerate() {
            let n = config.repetitions as f64;
            let (mut recall, mut precision, mut f, mut err) = (0.0, 0.0, 0.0, 0.0);
            let mut ok = 0usize;
            for rep in &per_rep {
                let s = rep[k];
                recall += s.recall;
                precision += s.precision;
                f += s.f;
                if let Some(e) = s.lifetime_error {
                    err += e;
                    ok += 1;
                }
            }
            rows.push(Fig4Row {
                sigma,
                delta,
                mean_recall: recall / n,
                mean_precision: precision / n,
                mean_f: f / n,
                mean_lifetime_error: if ok == 0 { f64::NAN } else { err / ok as f64 },
                ok_fits: ok,
                repetitions: config.repetitions,
            });
        }
    }
    Ok(rows)
}

pub fn rows_to_csv(mode: NoiseMode, rows: &[Fig4Row]) -> String {
    let mut out = String::from(
        "mode,sigma,delta,mean_recall,mean_precision,mean_f,mean_lifetime_error,ok_fits,repetitions\n",
    );
    let mode = match mode {
        NoiseMode::Global => "global",
        NoiseMode::Scattered => "scattered",
    };
    for r in rows {
        let _ = writeln!(
            out,
            "{mode},{},{},{},{},{},{},{},{}",
            r.sigma,
            r.delta,
            r.mean_recall,
            r.mean_precision,
            r.mean_f,
            r.mean_lifetime_error,
            r.ok_fits,
            r.repetitions
        );
    }
    out
}
