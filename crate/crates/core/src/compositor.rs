//! Raster types and the projection compositor.
//!
//! Pixels are normalized `[0, 1]` floats; 8-bit sRGB bytes are mapped by
//! `v / 255` on load and `round(v * 255)` (half away from zero) on save, so
//! load/save round-trips are bit-exact. The polygon fill uses the even-odd
//! rule sampled at pixel centers with a half-open horizontal ray: an edge
//! counts iff exactly one endpoint lies strictly above the ray, and a
//! crossing counts iff it lies at or to the right of the sample point.
//! Points exactly on a non-horizontal edge are therefore inside, and
//! self-intersecting vertex orders resolve deterministically.

use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, ImageReader, RgbImage};

use crate::error::{Error, Result};
use crate::projection::ProjectionParams;

/// Dense row-major RGB raster with channels in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: u32,
    height: u32,
    pixels: Vec<[f64; 3]>,
}

impl Image {
    pub fn new(width: u32, height: u32, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("image dimensions must be >= 1".into()));
        }
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::DimensionMismatch {
                expected: (width as usize) * (height as usize),
                actual: pixels.len(),
            });
        }
        if !pixels
            .iter()
            .flatten()
            .all(|c| c.is_finite() && (0.0..=1.0).contains(c))
        {
            return Err(Error::InvalidInput("pixel channel outside [0,1]".into()));
        }
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [f64; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity((width as usize) * (height as usize));
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Image::new(width, height, pixels)
    }

    pub fn solid(width: u32, height: u32, color: [f64; 3]) -> Result<Self> {
        Image::new(
            width,
            height,
            vec![color; (width as usize) * (height as usize)],
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f64; 3] {
        self.pixels[(y as usize) * (self.width as usize) + x as usize]
    }

    pub fn mean_color(&self) -> [f64; 3] {
        let mut sum = [0.0f64; 3];
        for p in &self.pixels {
            for c in 0..3 {
                sum[c] += p[c];
            }
        }
        let n = self.pixels.len() as f64;
        sum.map(|s| s / n)
    }

    pub fn from_rgb8(width: u32, height: u32, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != (width as usize) * (height as usize) * 3 {
            return Err(Error::DimensionMismatch {
                expected: (width as usize) * (height as usize) * 3,
                actual: bytes.len(),
            });
        }
        let pixels = bytes
            .chunks_exact(3)
            .map(|c| [c[0] as f64 / 255.0, c[1] as f64 / 255.0, c[2] as f64 / 255.0])
            .collect();
        Image::new(width, height, pixels)
    }

    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| p.map(|c| (c * 255.0).round() as u8))
            .collect()
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let img = ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .decode()?
            .to_rgb8();
        Image::from_rgb8(img.width(), img.height(), img.as_raw())
    }

    fn to_rgb_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width, self.height, self.to_rgb8())
            .expect("buffer length matches dimensions")
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_rgb_image()
            .save_with_format(path, ImageFormat::Png)?;
        Ok(())
    }

    /// The exact PNG bytes [`save_png`](Self::save_png) would write; also the
    /// payload external oracles receive.
    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Cursor::new(Vec::new());
        self.to_rgb_image().write_to(&mut buf, ImageFormat::Png)?;
        Ok(buf.into_inner())
    }

    pub fn from_png_bytes(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes)?.to_rgb8();
        Image::from_rgb8(img.width(), img.height(), img.as_raw())
    }
}

/// Binary raster locating the target object (true = attackable pixel).
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("mask dimensions must be >= 1".into()));
        }
        if bits.len() != (width as usize) * (height as usize) {
            return Err(Error::DimensionMismatch {
                expected: (width as usize) * (height as usize),
                actual: bits.len(),
            });
        }
        Ok(Mask {
            width,
            height,
            bits,
        })
    }

    /// The no-mask default: every pixel is attackable.
    pub fn all_true(width: u32, height: u32) -> Result<Self> {
        Mask::new(
            width,
            height,
            vec![true; (width as usize) * (height as usize)],
        )
    }

    /// Loads an 8-bit grayscale PNG; any nonzero sample is true.
    pub fn load_png(path: &Path) -> Result<Self> {
        let img = ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .decode()?
            .to_luma8();
        let bits = img.as_raw().iter().map(|&v| v != 0).collect();
        Mask::new(img.width(), img.height(), bits)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y as usize) * (self.width as usize) + x as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Scanline polygon fill at pixel centers.
///
/// Per row, the crossing abscissae of all counted edges are collected and
/// sorted; a pixel center is inside iff an odd number of crossings lie at or
/// to its right.
pub fn rasterize(vertices: &[[f64; 2]], width: u32, height: u32) -> Result<Mask> {
    if vertices.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "polygon needs at least 3 vertices, got {}",
            vertices.len()
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("raster dimensions must be >= 1".into()));
    }
    let n = vertices.len();
    let mut bits = vec![false; (width as usize) * (height as usize)];
    let mut crossings: Vec<f64> = Vec::with_capacity(n);
    for y in 0..height {
        let py = (y as f64 + 0.5) / height as f64;
        crossings.clear();
        for e in 0..n {
            let a = vertices[e];
            let b = vertices[(e + 1) % n];
            if (a[1] > py) != (b[1] > py) {
                let t = (py - a[1]) / (b[1] - a[1]);
                crossings.push(a[0] + t * (b[0] - a[0]));
            }
        }
        crossings.sort_by(f64::total_cmp);
        let row = (y as usize) * (width as usize);
        for x in 0..width {
            let px = (x as f64 + 0.5) / width as f64;
            let left_of = crossings.partition_point(|&c| c < px);
            bits[row + x as usize] = (crossings.len() - left_of) % 2 == 1;
        }
    }
    Mask::new(width, height, bits)
}

/// Applies the color projection to `image`: pixels inside both the
/// rasterized polygon and `mask` become `(1 - I) * X + I * C` per channel;
/// all other pixels are untouched.
pub fn composite(image: &Image, params: &ProjectionParams, mask: &Mask) -> Result<Image> {
    if image.width() != mask.width() || image.height() != mask.height() {
        return Err(Error::DimensionMismatch {
            expected: (image.width() as usize) * (image.height() as usize),
            actual: (mask.width() as usize) * (mask.height() as usize),
        });
    }
    params.validate()?;
    let region = rasterize(&params.vertices, image.width(), image.height())?;
    let i = params.intensity;
    let c = params.color;
    let pixels = image
        .pixels()
        .iter()
        .zip(region.bits().iter().zip(mask.bits()))
        .map(|(&p, (&in_region, &in_mask))| {
            if in_region && in_mask {
                [
                    (1.0 - i) * p[0] + i * c[0],
                    (1.0 - i) * p[1] + i * c[1],
                    (1.0 - i) * p[2] + i * c[2],
                ]
            } else {
                p
            }
        })
        .collect();
    Image::new(image.width(), image.height(), pixels)
}

/// Fraction of mask-true pixels covered by the projection region.
/// An all-false mask yields 0.
pub fn region_fraction(params: &ProjectionParams, mask: &Mask) -> Result<f64> {
    params.validate()?;
    let total = mask.count();
    if total == 0 {
        return Ok(0.0);
    }
    let region = rasterize(&params.vertices, mask.width(), mask.height())?;
    let covered = region
        .bits()
        .iter()
        .zip(mask.bits())
        .filter(|&(&r, &m)| r && m)
        .count();
    Ok(covered as f64 / total as f64)
}
