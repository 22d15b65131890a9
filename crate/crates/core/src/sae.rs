//! Surfaces of Active Events: per-polarity maps of the latest timestamp per pixel.

use crate::error::{Error, Result};
use crate::events::{Event, Polarity, SensorGeometry};

const NEVER: f64 = f64::NEG_INFINITY;

/// Default window side used by the plane fitter.
pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone)]
pub struct Sae {
    geometry: SensorGeometry,
    surfaces: [Vec<f64>; 2],
}

impl Sae {
    pub fn new(geometry: SensorGeometry) -> Self {
        let n = geometry.pixel_count();
        Self {
            geometry,
            surfaces: [vec![NEVER; n], vec![NEVER; n]],
        }
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    /// Latest timestamp at a pixel, `None` if it never fired.
    pub fn get(&self, p: Polarity, x: u32, y: u32) -> Option<f64> {
        let v = self.surfaces[p.index()][self.geometry.index(x, y)];
        (v != NEVER).then_some(v)
    }

    /// Records `e` on its polarity's surface. Stored times never decrease.
    pub fn update(&mut self, e: &Event) -> Result<()> {
        if !self.geometry.contains(e.x, e.y) {
            return Err(Error::OutOfBounds {
                index: 0,
                x: e.x,
                y: e.y,
                width: self.geometry.width(),
                height: self.geometry.height(),
            });
        }
        let i = self.geometry.index(e.x, e.y);
        let cell = &mut self.surfaces[e.p.index()][i];
        if e.t > *cell {
            *cell = e.t;
        }
        Ok(())
    }

    /// Snapshot of the `n`×`n` neighbourhood of `e` on its own polarity surface.
    /// `e` must already have been applied.
    pub fn window(&self, e: &Event, n: usize) -> SaeWindow {
        assert!(!n.is_multiple_of(2), "window side must be odd");
        let h = (n / 2) as i64;
        let surface = &self.surfaces[e.p.index()];
        let (w, ht) = (self.geometry.width() as i64, self.geometry.height() as i64);
        let mut timestamps = Vec::with_capacity(n * n);
        for dy in -h..=h {
            for dx in -h..=h {
                let (x, y) = (e.x as i64 + dx, e.y as i64 + dy);
                let v = if x < 0 || y < 0 || x >= w || y >= ht {
                    None
                } else {
                    let v = surface[(y * w + x) as usize];
                    (v != NEVER).then_some(v)
                };
                timestamps.push(v);
            }
        }
        timestamps[n * n / 2] = Some(e.t);
        SaeWindow {
            center: (e.x, e.y),
            n,
            timestamps,
            center_time: e.t,
        }
    }
}

/// Immutable local SAE snapshot centred on the current event.
///
/// Cells are row-major; `None` marks a pixel that never fired (or lies
/// outside the sensor).
#[derive(Debug, Clone, PartialEq)]
pub struct SaeWindow {
    center: (u32, u32),
    n: usize,
    timestamps: Vec<Option<f64>>,
    center_time: f64,
}

impl SaeWindow {
    pub fn new(
        center: (u32, u32),
        n: usize,
        mut timestamps: Vec<Option<f64>>,
        center_time: f64,
    ) -> Result<Self> {
        if n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("window side {n} is not odd")));
        }
        if timestamps.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "window needs {} cells, got {}",
                n * n,
                timestamps.len()
            )));
        }
        timestamps[n * n / 2] = Some(center_time);
        Ok(Self {
            center,
            n,
            timestamps,
            center_time,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half(&self) -> i64 {
        (self.n / 2) as i64
    }

    pub fn center(&self) -> (u32, u32) {
        self.center
    }

    pub fn center_time(&self) -> f64 {
        self.center_time
    }

    pub fn center_index(&self) -> usize {
        self.n * self.n / 2
    }

    pub fn timestamps(&self) -> &[Option<f64>] {
        &self.timestamps
    }

    /// Offset `(dx, dy)` of cell `i` relative to the centre.
    pub fn offset(&self, i: usize) -> (i64, i64) {
        let h = self.half();
        ((i % self.n) as i64 - h, (i / self.n) as i64 - h)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}
