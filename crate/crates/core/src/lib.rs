//! Event-camera edge detection by per-event lifetime estimation.
//!
//! Each event is fitted with a local plane on the Surface of Active Events
//! (SAE) using RANSAC with an intra-pixel-area distance, which yields a
//! visual flow and a lifetime: how long the event should stay visible before
//! the edge reaches the next pixel. Rendering only the events that are still
//! alive gives thin edges regardless of motion speed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod buffer_filter;
pub mod error;
pub mod eval;
pub mod events;
pub mod image;
pub mod lifetime;
pub mod plane_fit;
pub mod render;
pub mod sae;
pub mod seed;
pub mod synth;

pub use buffer_filter::{FilterMode, FilterParams};
pub use error::{Error, Result};
pub use events::{parse_event_text, write_event_text, Event, EventStream, Polarity, SensorGeometry};
pub use image::{read_pgm, write_pgm, EdgeImage, GrayImage};
pub use lifetime::{process_stream, LifetimedEvent, PipelineParams};
pub use plane_fit::{ransac_fit, FitResult, FitStatus, PlaneNormal, RansacParams};
pub use render::RenderQuery;
pub use sae::{Sae, SaeWindow};
