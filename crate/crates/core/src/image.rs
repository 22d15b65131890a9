//! Binary edge masks, grayscale maps, and their PGM (P2/P5) encoding.

use crate::error::{Error, Result};
use crate::events::SensorGeometry;

/// Gray level above which a PGM pixel is read as an edge.
pub const EDGE_THRESHOLD: u8 = 127;

/// Binary per-pixel edge mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeImage {
    geometry: SensorGeometry,
    mask: Vec<bool>,
}

impl EdgeImage {
    pub fn blank(geometry: SensorGeometry) -> Self {
        Self {
            geometry,
            mask: vec![false; geometry.pixel_count()],
        }
    }

    pub fn from_mask(geometry: SensorGeometry, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != geometry.pixel_count() {
            return Err(Error::InvalidParameter(format!(
                "mask has {} cells, geometry {} needs {}",
                mask.len(),
                geometry,
                geometry.pixel_count()
            )));
        }
        Ok(Self { geometry, mask })
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.mask[self.geometry.index(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        let i = self.geometry.index(x, y);
        self.mask[i] = on;
    }

    pub fn count_on(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Coordinates of all edge pixels in row-major order.
    pub fn on_pixels(&self) -> Vec<(u32, u32)> {
        let w = self.geometry.width() as usize;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| ((i % w) as u32, (i / w) as u32))
            .collect()
    }
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub geometry: SensorGeometry,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn from_edges(image: &EdgeImage) -> Self {
        Self {
            geometry: image.geometry,
            pixels: image.mask.iter().map(|&m| if m { 255 } else { 0 }).collect(),
        }
    }

    pub fn to_edges(&self) -> EdgeImage {
        EdgeImage {
            geometry: self.geometry,
            mask: self.pixels.iter().map(|&v| v > EDGE_THRESHOLD).collect(),
        }
    }
}

/// Reads a P2 or P5 graymap with maxval <= 255 and thresholds it into a mask.
pub fn read_pgm(bytes: &[u8]) -> Result<EdgeImage> {
    Ok(read_pgm_gray(bytes)?.to_edges())
}

/// Writes a mask as binary P5 (edge = 255, background = 0).
pub fn write_pgm(image: &EdgeImage) -> Vec<u8> {
    write_pgm_gray(&GrayImage::from_edges(image))
}

pub fn write_pgm_gray(image: &GrayImage) -> Vec<u8> {
    let mut out = format!(
        "P5\n{} {}\n255\n",
        image.geometry.width(),
        image.geometry.height()
    )
    .into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

pub fn read_pgm_gray(bytes: &[u8]) -> Result<GrayImage> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = bytes.get(..2).ok_or_else(|| Error::InvalidPgm("empty input".into()))?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        other => return Err(Error::UnsupportedMagic(String::from_utf8_lossy(other).into_owned())),
    };
    cur.pos = 2;
    let width = cur.header_number("width")?;
    let height = cur.header_number("height")?;
    let maxval = cur.header_number("maxval")?;
    if maxval > 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    if maxval == 0 {
        return Err(Error::InvalidPgm("maxval must be positive".into()));
    }
    let geometry = SensorGeometry::new(width, height)
        .map_err(|_| Error::InvalidPgm(format!("bad dimensions {width}x{height}")))?;
    let expected = geometry.pixel_count();

    let pixels = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(Error::InvalidPgm("missing raster separator".into())),
        }
        let raster = &bytes[cur.pos..];
        if raster.len() < expected {
            return Err(Error::Truncated {
                expected,
                found: raster.len(),
            });
        }
        raster[..expected].to_vec()
    } else {
        let mut pixels = Vec::with_capacity(expected);
        while let Some(tok) = cur.token() {
            if pixels.len() == expected {
                return Err(Error::InvalidPgm("more pixels than width x height".into()));
            }
            let v: u32 = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidPgm("non-numeric pixel".into()))?;
            if v > 255 {
                return Err(Error::InvalidPgm(format!("pixel {v} exceeds maxval {maxval}")));
            }
            pixels.push(v as u8);
        }
        if pixels.len() < expected {
            return Err(Error::Truncated {
                expected,
                found: pixels.len(),
            });
        }
        pixels
    };
    if let Some(&v) = pixels.iter().find(|&&v| u32::from(v) > maxval) {
        return Err(Error::InvalidPgm(format!("pixel {v} exceeds maxval {maxval}")));
    }
    Ok(GrayImage { geometry, pixels })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    if c == b'\n' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn header_number(&mut self, what: &str) -> Result<u32> {
        let tok = self
            .token()
            .ok_or_else(|| Error::InvalidPgm(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidPgm(format!("invalid {what}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plain_pgm_thresholds() {
        let img = read_pgm(b"P2 2 1 255 255 0").unwrap();
        assert_eq!(img.mask(), &[true, false]);
        let img = read_pgm(b"P2\n# comment\n3 1\n255\n128 127 200\n").unwrap();
        assert_eq!(img.mask(), &[true, false, true]);
    }

    #[test]
    fn binary_pgm() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 130, 12]);
        assert_eq!(read_pgm(&bytes).unwrap().mask(), &[false, true, true, false]);
    }

    #[test]
    fn rejects_wide_maxval() {
        let err = read_pgm(b"P5 1 1 65535\n\x00\x00").unwrap_err();
        assert_eq!(err.to_string(), "unsupported maxval 65535");
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(matches!(read_pgm(b"P6 1 1 255\n\0\0\0"), Err(Error::UnsupportedMagic(_))));
        assert!(matches!(read_pgm(b"P5 2 2 255\n\0\0"), Err(Error::Truncated { expected: 4, found: 2 })));
        assert!(matches!(read_pgm(b"P2 2 2 255 0 0 0"), Err(Error::Truncated { .. })));
        assert!(matches!(read_pgm(b"P2 1 1 255 0 0"), Err(Error::InvalidPgm(_))));
        assert!(matches!(read_pgm(b"P2 1 1 100 200"), Err(Error::InvalidPgm(_))));
        assert!(matches!(read_pgm(b"P2 0 1 255"), Err(Error::InvalidPgm(_))));
        assert!(matches!(read_pgm(b""), Err(Error::InvalidPgm(_))));
    }

    #[test]
    fn writes_p5() {
        let g = SensorGeometry::new(2, 1).unwrap();
        let img = EdgeImage::from_mask(g, vec![true, false]).unwrap();
        assert_eq!(write_pgm(&img), b"P5\n2 1\n255\n\xff\x00".to_vec());
    }

    proptest! {
        #[test]
        fn pgm_round_trip(w in 1u32..20, h in 1u32..20, seed in any::<u64>()) {
            let g = SensorGeometry::new(w, h).unwrap();
            let mask: Vec<bool> = (0..g.pixel_count())
                .map(|i| (seed.rotate_left(i as u32 % 64) ^ i as u64) & 1 == 1)
                .collect();
            let img = EdgeImage::from_mask(g, mask).unwrap();
            prop_assert_eq!(read_pgm(&write_pgm(&img)).unwrap(), img);
        }
    }
}
