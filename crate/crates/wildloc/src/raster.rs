//! Single-channel rasters, validity masks, and the resampling operations the
//! pipeline applies to drone photos before matching.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader};

use crate::error::{Error, Result};
use crate::geo::ImageDims;

/// Row-major 8-bit grayscale image.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayRaster {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for GrayRaster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GrayRaster({}x{})", self.width, self.height)
    }
}

impl GrayRaster {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::TooSmall(format!("raster {width}x{height}")));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::Format(format!(
                "{} pixels supplied for a {width}x{height} raster",
                pixels.len()
            )));
        }
        Ok(GrayRaster {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        GrayRaster {
            width,
            height,
            pixels: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayRaster {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> ImageDims {
        ImageDims {
            width: self.width,
            height: self.height,
        }
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.pixels[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&v| v as f64).sum::<f64>() / self.pixels.len() as f64
    }

    /// Copies the `dims`-sized window whose top-left pixel is `(x0, y0)`.
    pub fn crop(&self, x0: u32, y0: u32, dims: ImageDims) -> Result<GrayRaster> {
        if x0 + dims.width > self.width || y0 + dims.height > self.height {
            return Err(Error::OutOfBounds(format!(
                "crop {dims} at ({x0}, {y0}) exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(dims.width as usize * dims.height as usize);
        for y in y0..y0 + dims.height {
            let row = y as usize * self.width as usize;
            pixels.extend_from_slice(&self.pixels[row + x0 as usize..row + (x0 + dims.width) as usize]);
        }
        GrayRaster::new(dims.width, dims.height, pixels)
    }

    /// Bilinear sample at a continuous position given in pixel-index
    /// coordinates (pixel `i` has its center at `i`). Neighbors are clamped to
    /// the image.
    #[inline]
    pub fn sample_bilinear(&self, fx: f64, fy: f64) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let fx = fx.clamp(0.0, max_x);
        let fy = fy.clamp(0.0, max_y);
        let x0 = fx.floor();
        let y0 = fy.floor();
        let tx = fx - x0;
        let ty = fy - y0;
        let x0 = x0 as u32;
        let y0 = y0 as u32;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let p00 = self.get(x0, y0) as f64;
        let p10 = self.get(x1, y0) as f64;
        let p01 = self.get(x0, y1) as f64;
        let p11 = self.get(x1, y1) as f64;
        let top = p00 + (p10 - p00) * tx;
        let bottom = p01 + (p11 - p01) * tx;
        top + (bottom - top) * ty
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("raster buffer length matches its dimensions")
    }

    pub fn from_image(img: &GrayImage) -> Self {
        GrayRaster {
            width: img.width(),
            height: img.height(),
            pixels: img.as_raw().clone(),
        }
    }

    /// Writes the raster as an 8-bit grayscale PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_image()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| match e {
                image::ImageError::IoError(io) => Error::io(path, io),
                other => Error::Decode {
                    path: path.to_path_buf(),
                    message: other.to_string(),
                },
            })
    }
}

/// Per-pixel validity; `false` marks synthetic fill introduced by rotation.
#[derive(Clone, PartialEq, Eq)]
pub struct ValidityMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for ValidityMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ValidityMask({}x{}, {} valid)",
            self.width,
            self.height,
            self.valid_count()
        )
    }
}

impl ValidityMask {
    pub fn all_valid(width: u32, height: u32) -> Self {
        ValidityMask {
            width,
            height,
            bits: vec![true; width as usize * height as usize],
        }
    }

    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::Format(format!(
                "{} mask bits supplied for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(ValidityMask { width, height, bits })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn is_valid(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn valid_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

/// Reads a PNG or JPEG and converts it to luminance with
/// `L = round(0.299 R + 0.587 G + 0.114 B)`.
pub fn load_gray(path: &Path) -> Result<GrayRaster> {
    let rgb = load_image(path)?.to_rgb8();
    let pixels = rgb.pixels().map(|p| luminance(p.0[0], p.0[1], p.0[2])).collect();
    GrayRaster::new(rgb.width(), rgb.height(), pixels)
}

/// Decodes a PNG or JPEG file without color conversion.
pub fn load_image(path: &Path) -> Result<DynamicImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let decode_err = |message: String| Error::Decode {
        path: path.to_path_buf(),
        message,
    };
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| decode_err(e.to_string()))?;
    match reader.format() {
        Some(image::ImageFormat::Png) | Some(image::ImageFormat::Jpeg) => {}
        Some(other) => return Err(decode_err(format!("unsupported format {other:?}"))),
        None => return Err(decode_err("unrecognized image format".into())),
    }
    reader.decode().map_err(|e| decode_err(e.to_string()))
}

#[inline]
pub(crate) fn luminance(r: u8, g: u8, b: u8) -> u8 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
        .round()
        .clamp(0.0, 255.0) as u8
}

/// Sine and cosine of a clockwise angle in degrees, exact at multiples of 90.
pub(crate) fn sin_cos_deg(degrees: f64) -> (f64, f64) {
    let quarter = degrees / 90.0;
    if (quarter - quarter.round()).abs() < 1e-12 {
        match (quarter.round() as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        degrees.to_radians().sin_cos()
    }
}

/// Rotates image content clockwise by `degrees` about its center onto a
/// canvas that holds the whole rotated rectangle.
///
/// Output pixels whose source position falls outside the input are filled
/// with 0 and marked invalid in the returned mask.
pub fn rotate_expand(img: &GrayRaster, degrees: f64) -> (GrayRaster, ValidityMask) {
    let (sin, cos) = sin_cos_deg(degrees);
    let (w, h) = (img.width as f64, img.height as f64);
    let out_w = rotated_extent(w * cos.abs() + h * sin.abs());
    let out_h = rotated_extent(w * sin.abs() + h * cos.abs());

    let src_cx = w / 2.0;
    let src_cy = h / 2.0;
    let dst_cx = out_w as f64 / 2.0;
    let dst_cy = out_h as f64 / 2.0;
    let max_fx = w - 1.0;
    let max_fy = h - 1.0;
    const EPS: f64 = 1e-6;

    let n = out_w as usize * out_h as usize;
    let mut pixels = vec![0u8; n];
    let mut bits = vec![false; n];
    for oy in 0..out_h {
        let dy = oy as f64 + 0.5 - dst_cy;
        for ox in 0..out_w {
            let dx = ox as f64 + 0.5 - dst_cx;
            // inverse of the clockwise rotation
            let sx = src_cx + dx * cos + dy * sin;
            let sy = src_cy - dx * sin + dy * cos;
            let fx = sx - 0.5;
            let fy = sy - 0.5;
            if fx < -EPS || fy < -EPS || fx > max_fx + EPS || fy > max_fy + EPS {
                continue;
            }
            let idx = oy as usize * out_w as usize + ox as usize;
            pixels[idx] = img.sample_bilinear(fx, fy).round() as u8;
            bits[idx] = true;
        }
    }
    (
        GrayRaster {
            width: out_w,
            height: out_h,
            pixels,
        },
        ValidityMask {
            width: out_w,
            height: out_h,
            bits,
        },
    )
}

fn rotated_extent(v: f64) -> u32 {
    ((v - 1e-9).ceil() as u32).max(1)
}

/// Halves both dimensions `levels` times with a 2x2 box filter (round half up).
pub fn resize_half(img: &GrayRaster, levels: u32) -> Result<GrayRaster> {
    let (mut w, mut h) = (img.width, img.height);
    for _ in 0..levels {
        w /= 2;
        h /= 2;
    }
    if levels > 0 && (w < 32 || h < 32) {
        return Err(Error::TooSmall(format!(
            "{}x{} halved {levels} times is {w}x{h}, below 32 px",
            img.width, img.height
        )));
    }
    let mut cur = img.clone();
    for _ in 0..levels {
        cur = halve(&cur);
    }
    Ok(cur)
}

fn halve(img: &GrayRaster) -> GrayRaster {
    let w = img.width / 2;
    let h = img.height / 2;
    GrayRaster::from_fn(w, h, |x, y| {
        let sum = img.get(2 * x, 2 * y) as u32
            + img.get(2 * x + 1, 2 * y) as u32
            + img.get(2 * x, 2 * y + 1) as u32
            + img.get(2 * x + 1, 2 * y + 1) as u32;
        ((sum + 2) / 4) as u8
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: u32, h: u32, seed: u64) -> GrayRaster {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayRaster::from_fn(w, h, |_, _| rng.random())
    }

    /// Value noise on a 12 px lattice with smoothstep blending.
    fn smooth_noise(w: u32, h: u32, seed: u64) -> GrayRaster {
        const CELL: u32 = 12;
        let coarse = noise(w / CELL + 2, h / CELL + 2, seed);
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        GrayRaster::from_fn(w, h, |x, y| {
            let (gx, gy) = ((x / CELL) as f64, (y / CELL) as f64);
            let tx = smooth((x % CELL) as f64 / CELL as f64);
            let ty = smooth((y % CELL) as f64 / CELL as f64);
            coarse.sample_bilinear(gx + tx, gy + ty).round() as u8
        })
    }

    #[test]
    fn load_gray_white_and_red() {
        let dir = tempfile::tempdir().unwrap();
        let white = dir.path().join("white.png");
        image::RgbImage::from_pixel(2, 2, image::Rgb([255, 255, 255]))
            .save(&white)
            .unwrap();
        let g = load_gray(&white).unwrap();
        assert_eq!((g.width(), g.height()), (2, 2));
        assert!(g.pixels().iter().all(|&v| v == 255));

        let red = dir.path().join("red.png");
        image::RgbImage::from_pixel(1, 1, image::Rgb([255, 0, 0]))
            .save(&red)
            .unwrap();
        assert_eq!(load_gray(&red).unwrap().get(0, 0), 76);
    }

    #[test]
    fn load_gray_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_gray(&dir.path().join("nope.png")),
            Err(Error::Io { .. })
        ));
        let junk = dir.path().join("junk.png");
        std::fs::write(&junk, b"definitely not an image").unwrap();
        assert!(matches!(load_gray(&junk), Err(Error::Decode { .. })));
    }

    #[test]
    fn rotate_zero_is_identity() {
        let img = noise(37, 23, 1);
        let (out, mask) = rotate_expand(&img, 0.0);
        assert_eq!(out, img);
        assert_eq!(mask.valid_count(), 37 * 23);
    }

    #[test]
    fn rotate_ninety_swaps_axes() {
        let img = noise(40, 30, 2);
        let (out, mask) = rotate_expand(&img, 90.0);
        assert_eq!((out.width(), out.height()), (30, 40));
        assert_eq!(mask.valid_count(), 30 * 40);
        // clockwise: source (x, y) lands at (H - 1 - y, x)
        for y in 0..30 {
            for x in 0..40 {
                assert_eq!(out.get(29 - y, x), img.get(x, y));
            }
        }
    }

    #[test]
    fn rotate_forty_five_canvas() {
        let img = GrayRaster::filled(100, 100, 200);
        let (out, mask) = rotate_expand(&img, 45.0);
        assert_eq!((out.width(), out.height()), (142, 142));
        // corners of the canvas are fill, the center is content
        assert!(!mask.is_valid(0, 0));
        assert!(!mask.is_valid(141, 141));
        assert!(mask.is_valid(71, 71));
        assert_eq!(out.get(0, 0), 0);
        // valid region is the rotated square: |dx| + |dy| <= 50 * sqrt(2)
        let c = 71.0;
        for y in 0..142 {
            for x in 0..142 {
                let d = (x as f64 + 0.5 - c).abs() + (y as f64 + 0.5 - c).abs();
                if d < 100.0 / 2f64.sqrt() - 2.0 {
                    assert!(mask.is_valid(x, y), "({x},{y}) should be valid");
                } else if d > 100.0 / 2f64.sqrt() + 1.0 {
                    assert!(!mask.is_valid(x, y), "({x},{y}) should be fill");
                }
            }
        }
    }

    #[test]
    fn rotation_round_trip_loss_is_small() {
        for (seed, angle) in [(3u64, 17.0), (4, -33.0), (5, 61.5)] {
            let img = smooth_noise(96, 80, seed);
            let (r1, m1) = rotate_expand(&img, angle);
            let (r2, m2) = rotate_expand(&r1, -angle);
            // first-pass validity carried through the second rotation
            let m1_img =
                GrayRaster::from_fn(
                    m1.width(),
                    m1.height(),
                    |x, y| {
                        if m1.is_valid(x, y) {
                            255
                        } else {
                            0
                        }
                    },
                );
            let (m1_back, _) = rotate_expand(&m1_img, -angle);
            // original pixel centers, located relative to the canvas center
            let ox = r2.width() as f64 / 2.0 - img.width() as f64 / 2.0;
            let oy = r2.height() as f64 / 2.0 - img.height() as f64 / 2.0;
            let mut total = 0.0;
            let mut n = 0usize;
            for y in 0..img.height() {
                for x in 0..img.width() {
                    let (fx, fy) = (x as f64 + ox, y as f64 + oy);
                    let (x0, y0) = (fx.floor() as u32, fy.floor() as u32);
                    let (x1, y1) = ((x0 + 1).min(r2.width() - 1), (y0 + 1).min(r2.height() - 1));
                    if ![(x0, y0), (x1, y0), (x0, y1), (x1, y1)]
                        .iter()
                        .all(|&(a, b)| m2.is_valid(a, b) && m1_back.get(a, b) == 255)
                    {
                        continue;
                    }
                    total += (r2.sample_bilinear(fx, fy) - img.get(x, y) as f64).abs();
                    n += 1;
                }
            }
            assert!(n > 0);
            let mad = total / n as f64;
            assert!(mad <= 2.0, "angle {angle}: mean abs diff {mad}");
            let band = 2 * (img.width() + img.height()) as i64;
            assert!((m1.valid_count() as i64 - (96 * 80) as i64).abs() <= band);
        }
    }

    #[test]
    fn resize_examples() {
        let img = noise(64, 48, 9);
        assert_eq!(resize_half(&img, 0).unwrap(), img);
        let big = GrayRaster::filled(4000, 3000, 7);
        let half = resize_half(&big, 1).unwrap();
        assert_eq!((half.width(), half.height()), (2000, 1500));
        // 2x2 blocks of {0, 0, 255, 255} average to 127.5, rounded up
        let blocks = GrayRaster::from_fn(64, 64, |_, y| if y % 2 == 0 { 0 } else { 255 });
        let out = resize_half(&blocks, 1).unwrap();
        assert!(out.pixels().iter().all(|&v| v == 128));
        assert!(matches!(resize_half(&img, 1), Err(Error::TooSmall(_))));
    }

    #[test]
    fn resize_preserves_mean() {
        for seed in 0..5 {
            let img = noise(256, 128, seed);
            let out = resize_half(&img, 2).unwrap();
            assert!((out.mean() - img.mean()).abs() <= 1.0);
        }
    }

    #[test]
    fn rotation_mask_matches_raster() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let w = rng.random_range(5..60);
            let h = rng.random_range(5..60);
            let angle = rng.random_range(-180.0..180.0);
            let (r, m) = rotate_expand(&GrayRaster::filled(w, h, 1), angle);
            assert_eq!((r.width(), r.height()), (m.width(), m.height()));
            let band = 2 * (w + h) as i64;
            assert!((m.valid_count() as i64 - (w * h) as i64).abs() <= band);
        }
    }
}
