//! Event data model and the plain-text `t x y p` stream format.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};

/// Sign of the log-intensity change that triggered an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    /// On-disk encoding: 1 for positive, 0 for negative.
    pub fn as_bit(self) -> u8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => 0,
        }
    }

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            1 => Some(Polarity::Positive),
            0 => Some(Polarity::Negative),
            _ => None,
        }
    }

    pub(crate) fn index(self) -> usize {
        self.as_bit() as usize
    }
}

/// One asynchronous brightness-change record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Timestamp in seconds.
    pub t: f64,
    pub x: u32,
    pub y: u32,
    pub p: Polarity,
}

impl Event {
    pub fn new(t: f64, x: u32, y: u32, p: Polarity) -> Self {
        Self { t, x, y, p }
    }

    /// Bitwise identity of the event, usable as a map key.
    pub fn key(&self) -> EventKey {
        EventKey {
            t_bits: self.t.to_bits(),
            x: self.x,
            y: self.y,
            p: self.p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventKey {
    t_bits: u64,
    x: u32,
    y: u32,
    p: Polarity,
}

/// Sensor dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SensorGeometry {
    width: u32,
    height: u32,
}

impl SensorGeometry {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGeometry { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height
    }

    /// Row-major index of an in-bounds pixel.
    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }
}

impl fmt::Display for SensorGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// A validated, time-ordered sequence of events on a fixed sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    geometry: SensorGeometry,
    events: Vec<Event>,
}

impl EventStream {
    /// Validates bounds, finiteness and non-decreasing timestamps.
    pub fn new(geometry: SensorGeometry, events: Vec<Event>) -> Result<Self> {
        let mut last = f64::NEG_INFINITY;
        for (index, e) in events.iter().enumerate() {
            if !e.t.is_finite() || e.t < 0.0 {
                return Err(Error::InvalidTimestamp { index, t: e.t });
            }
            if !geometry.contains(e.x, e.y) {
                return Err(Error::OutOfBounds {
                    index,
                    x: e.x,
                    y: e.y,
                    width: geometry.width,
                    height: geometry.height,
                });
            }
            if e.t < last {
                return Err(Error::DecreasingTimestamp { index });
            }
            last = e.t;
        }
        Ok(Self { geometry, events })
    }

    pub fn empty(geometry: SensorGeometry) -> Self {
        Self {
            geometry,
            events: Vec::new(),
        }
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// Time of the last event, or 0 for an empty stream.
    pub fn end_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.t)
    }

    /// Events with `t <= until`, as a new stream.
    pub fn prefix_until(&self, until: f64) -> EventStream {
        let n = self.events.partition_point(|e| e.t <= until);
        EventStream {
            geometry: self.geometry,
            events: self.events[..n].to_vec(),
        }
    }
}

/// Parses `t x y p` lines. Blank lines and `#` comments are skipped.
pub fn parse_event_text(text: &str, geometry: SensorGeometry) -> Result<EventStream> {
    let mut events = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let line_no = lineno + 1;
        let malformed = |reason: &str| Error::MalformedLine {
            line: line_no,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(malformed(&format!("expected 4 fields, found {}", fields.len())));
        }
        let t: f64 = fields[0]
            .parse()
            .map_err(|_| malformed("timestamp is not a number"))?;
        let x: u32 = fields[1]
            .parse()
            .map_err(|_| malformed("x is not a non-negative integer"))?;
        let y: u32 = fields[2]
            .parse()
            .map_err(|_| malformed("y is not a non-negative integer"))?;
        let p = fields[3]
            .parse::<u8>()
            .ok()
            .and_then(Polarity::from_bit)
            .ok_or_else(|| malformed("polarity must be 0 or 1"))?;
        events.push(Event::new(t, x, y, p));
    }
    EventStream::new(geometry, events)
}

/// Serializes a stream; `{}` formatting of f64 is shortest-round-trip, so
/// parsing the output reproduces every timestamp bit for bit.
pub fn write_event_text(stream: &EventStream) -> String {
    let mut out = String::with_capacity(stream.len() * 24);
    for e in stream.events() {
        let _ = writeln!(out, "{} {} {} {}", e.t, e.x, e.y, e.p.as_bit());
    }
    out
}
