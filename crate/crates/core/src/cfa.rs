//! Bayer color filter array rasters.
//!
//! Conversion between RGB rasters and single-channel Bayer rasters, bilinear
//! demosaicing and the camera byte layout. Only whole 2×2 cells are
//! supported, so both dimensions must be even.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Color channel index into an RGB triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Red = 0,
    Green = 1,
    Blue = 2,
}

/// Layout of the repeating 2×2 filter cell, named in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CfaPattern {
    Bggr,
    Grbg,
    Gbrg,
    Rggb,
}

impl CfaPattern {
    pub const ALL: [CfaPattern; 4] = [
        CfaPattern::Bggr,
        CfaPattern::Grbg,
        CfaPattern::Gbrg,
        CfaPattern::Rggb,
    ];

    fn cell(self) -> [Channel; 4] {
        use Channel::*;
        match self {
            CfaPattern::Bggr => [Blue, Green, Green, Red],
            CfaPattern::Grbg => [Green, Red, Blue, Green],
            CfaPattern::Gbrg => [Green, Blue, Red, Green],
            CfaPattern::Rggb => [Red, Green, Green, Blue],
        }
    }

    /// Channel sampled at pixel `(x, y)`.
    #[inline]
    pub fn channel_at(self, x: usize, y: usize) -> Channel {
        self.cell()[(y & 1) * 2 + (x & 1)]
    }

    /// Code stored in the `.bayer` container header.
    pub fn code(self) -> u8 {
        match self {
            CfaPattern::Bggr => 0,
            CfaPattern::Grbg => 1,
            CfaPattern::Gbrg => 2,
            CfaPattern::Rggb => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        CfaPattern::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for CfaPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CfaPattern::Bggr => "BGGR",
            CfaPattern::Grbg => "GRBG",
            CfaPattern::Gbrg => "GBRG",
            CfaPattern::Rggb => "RGGB",
        };
        f.write_str(s)
    }
}

impl FromStr for CfaPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BGGR" => Ok(CfaPattern::Bggr),
            "GRBG" => Ok(CfaPattern::Grbg),
            "GBRG" => Ok(CfaPattern::Gbrg),
            "RGGB" => Ok(CfaPattern::Rggb),
            other => Err(Error::Parameter(format!("unknown CFA pattern {other:?}"))),
        }
    }
}

/// Interleaved 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != 3 * width * height {
            return Err(Error::Dimension(format!(
                "{}x{} RGB image needs {} bytes, got {}",
                width,
                height,
                3 * width * height,
                pixels.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let pixels = rgb
            .iter()
            .copied()
            .cycle()
            .take(3 * width * height)
            .collect();
        RgbImage {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn read_png(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path)?.into_rgb8();
        let (w, h) = img.dimensions();
        RgbImage::new(w as usize, h as usize, img.into_raw())
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let w =
            u32::try_from(self.width).map_err(|_| Error::Dimension("width too large".into()))?;
        let h =
            u32::try_from(self.height).map_err(|_| Error::Dimension("height too large".into()))?;
        let buf = image::RgbImage::from_raw(w, h, self.pixels.clone())
            .ok_or_else(|| Error::Dimension("pixel buffer does not match dimensions".into()))?;
        buf.save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }
}

/// Single-channel raw sensor raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BayerImage {
    width: usize,
    height: usize,
    pattern: CfaPattern,
    samples: Vec<u8>,
}

fn check_even(width: usize, height: usize) -> Result<()> {
    if !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "{width}x{height} is not a whole number of 2x2 cells"
        )));
    }
    Ok(())
}

impl BayerImage {
    pub fn new(width: usize, height: usize, pattern: CfaPattern, samples: Vec<u8>) -> Result<Self> {
        check_even(width, height)?;
        if samples.len() != width * height {
            return Err(Error::Dimension(format!(
                "{}x{} Bayer image needs {} samples, got {}",
                width,
                height,
                width * height,
                samples.len()
            )));
        }
        Ok(BayerImage {
            width,
            height,
            pattern,
            samples,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pattern(&self) -> CfaPattern {
        self.pattern
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn sample(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }
}

/// Keeps, at every pixel, only the channel the filter passes there.
pub fn extract_cfa(rgb: &RgbImage, pattern: CfaPattern) -> Result<BayerImage> {
    check_even(rgb.width, rgb.height)?;
    let mut samples = Vec::with_capacity(rgb.width * rgb.height);
    for y in 0..rgb.height {
        for x in 0..rgb.width {
            samples.push(rgb.pixel(x, y)[pattern.channel_at(x, y) as usize]);
        }
    }
    Ok(BayerImage {
        width: rgb.width,
        height: rgb.height,
        pattern,
        samples,
    })
}

/// Bilinear demosaicing over the 3×3 neighborhood.
///
/// The sampled channel is copied through. A missing channel is the mean of
/// the same-channel samples among the eight neighbors, rounded half away
/// from zero, with replicate padding at the borders. Replicated border
/// positions count once per neighbor slot, as if the raster were physically
/// padded.
pub fn demosaic_bilinear(bayer: &BayerImage) -> RgbImage {
    let (w, h) = (bayer.width, bayer.height);
    let mut pixels = vec![0u8; 3 * w * h];
    for y in 0..h {
        for x in 0..w {
            let own = bayer.pattern.channel_at(x, y) as usize;
            let mut sum = [0u32; 3];
            let mut count = [0u32; 3];
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                    let ny = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                    let c = bayer.pattern.channel_at(nx, ny) as usize;
                    sum[c] += u32::from(bayer.sample(nx, ny));
                    count[c] += 1;
                }
            }
            let out = &mut pixels[3 * (y * w + x)..3 * (y * w + x) + 3];
            for c in 0..3 {
                out[c] = if c == own {
                    bayer.sample(x, y)
                } else if count[c] == 0 {
                    // Cannot happen with replicate padding on even-sized rasters
                    // larger than 1 pixel; keep the own sample as a fallback.
                    bayer.sample(x, y)
                } else {
                    // Non-negative sum: half away from zero == floor(s/n + 1/2).
                    ((2 * sum[c] + count[c]) / (2 * count[c])) as u8
                };
            }
        }
    }
    RgbImage {
        width: w,
        height: h,
        pixels,
    }
}

/// Row-major sample dump; no header, no padding.
pub fn pack_bytes(bayer: &BayerImage) -> Vec<u8> {
    bayer.samples.clone()
}

/// Inverse of [`pack_bytes`] given the dimensions and pattern stored elsewhere.
pub fn unpack_bytes(
    bytes: &[u8],
    width: usize,
    height: usize,
    pattern: CfaPattern,
) -> Result<BayerImage> {
    BayerImage::new(width, height, pattern, bytes.to_vec())
}

const MAGIC: &[u8; 4] = b"BAYR";
pub const HEADER_LEN: usize = 12;

/// Writes the `.bayer` container: 12-byte little-endian header then payload.
pub fn write_bayer<W: Write>(mut out: W, bayer: &BayerImage) -> Result<()> {
    let w = u16::try_from(bayer.width)
        .map_err(|_| Error::Dimension(format!("width {} exceeds u16", bayer.width)))?;
    let h = u16::try_from(bayer.height)
        .map_err(|_| Error::Dimension(format!("height {} exceeds u16", bayer.height)))?;
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(MAGIC);
    header[4..6].copy_from_slice(&w.to_le_bytes());
    header[6..8].copy_from_slice(&h.to_le_bytes());
    header[8] = bayer.pattern.code();
    out.write_all(&header)?;
    out.write_all(&pack_bytes(bayer))?;
    Ok(())
}

pub fn read_bayer<R: Read>(mut input: R) -> Result<BayerImage> {
    let mut header = [0u8; HEADER_LEN];
    input
        .read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated .bayer header: {e}")))?;
    if &header[..4] != MAGIC {
        return Err(Error::Format("bad .bayer magic".into()));
    }
    let w = u16::from_le_bytes([header[4], header[5]]) as usize;
    let h = u16::from_le_bytes([header[6], header[7]]) as usize;
    let pattern = CfaPattern::from_code(header[8])
        .ok_or_else(|| Error::Format(format!("unknown pattern code {}", header[8])))?;
    let mut payload = Vec::with_capacity(w * h);
    input.read_to_end(&mut payload)?;
    if payload.len() != w * h {
        return Err(Error::Format(format!(
            "payload has {} bytes, header says {}x{}",
            payload.len(),
            w,
            h
        )));
    }
    unpack_bytes(&payload, w, h, pattern)
}

pub fn save_bayer(path: impl AsRef<Path>, bayer: &BayerImage) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(Error::io_at(path))?;
    let mut out = std::io::BufWriter::new(file);
    write_bayer(&mut out, bayer)?;
    out.flush()?;
    Ok(())
}

pub fn load_bayer(path: impl AsRef<Path>) -> Result<BayerImage> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(Error::io_at(path))?;
    read_bayer(std::io::BufReader::new(file))
}
