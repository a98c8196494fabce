//! Image buffers shared across the crate: a plain linear-RGB float image
//! plus the two validated domain types built on it (equirectangular HDR
//! panoramas and [0,1] LDR images).

use std::ops::{Add, AddAssign, Mul, Sub};
use std::path::Path;

use crate::error::{Error, Result};

/// Linear RGB triple.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rgb {
    pub r: f32,
    pub g: f32,
    pub b: f32,
}

impl Rgb {
    pub const BLACK: Rgb = Rgb {
        r: 0.0,
        g: 0.0,
        b: 0.0,
    };

    pub fn new(r: f32, g: f32, b: f32) -> Self {
        Rgb { r, g, b }
    }

    pub fn splat(v: f32) -> Self {
        Rgb { r: v, g: v, b: v }
    }

    /// Rec. 709 luminance.
    pub fn luminance(self) -> f32 {
        0.2126 * self.r + 0.7152 * self.g + 0.0722 * self.b
    }

    pub fn max_channel(self) -> f32 {
        self.r.max(self.g).max(self.b)
    }

    pub fn map(self, f: impl Fn(f32) -> f32) -> Rgb {
        Rgb::new(f(self.r), f(self.g), f(self.b))
    }

    pub fn is_finite(self) -> bool {
        self.r.is_finite() && self.g.is_finite() && self.b.is_finite()
    }

    pub fn channels(self) -> [f32; 3] {
        [self.r, self.g, self.b]
    }

    pub fn channel(self, i: usize) -> f32 {
        match i {
            0 => self.r,
            1 => self.g,
            _ => self.b,
        }
    }
}

impl Add for Rgb {
    type Output = Rgb;
    fn add(self, o: Rgb) -> Rgb {
        Rgb::new(self.r + o.r, self.g + o.g, self.b + o.b)
    }
}

impl AddAssign for Rgb {
    fn add_assign(&mut self, o: Rgb) {
        *self = *self + o;
    }
}

impl Sub for Rgb {
    type Output = Rgb;
    fn sub(self, o: Rgb) -> Rgb {
        Rgb::new(self.r - o.r, self.g - o.g, self.b - o.b)
    }
}

impl Mul<f32> for Rgb {
    type Output = Rgb;
    fn mul(self, s: f32) -> Rgb {
        Rgb::new(self.r * s, self.g * s, self.b * s)
    }
}

/// Row-major RGB image with f32 channels. No value constraints; the
/// validated wrappers below add them.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl ImageRgb {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("image dimensions must be non-zero".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::DimMismatch(format!(
                "pixel buffer has {} entries, expected {}x{}={}",
                pixels.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(ImageRgb {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: Rgb) -> Self {
        ImageRgb {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        ImageRgb {
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

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, v: Rgb) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgb] {
        &mut self.pixels
    }

    pub fn map(&self, f: impl Fn(Rgb) -> Rgb) -> ImageRgb {
        ImageRgb {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn same_dims(&self, other: &ImageRgb) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn all_finite(&self) -> bool {
        self.pixels.iter().all(|p| p.is_finite())
    }
}

/// Bilinear resize with edge clamping. Pixel centers are aligned so that the
/// output grid spans the same [0,1]^2 domain as the input grid.
pub fn resize_bilinear(img: &ImageRgb, new_width: usize, new_height: usize) -> Result<ImageRgb> {
    if new_width == 0 || new_height == 0 {
        return Err(Error::InvalidArgument("resize target must be non-zero".into()));
    }
    let (w, h) = (img.width(), img.height());
    let out = ImageRgb::from_fn(new_width, new_height, |x, y| {
        let sx = (x as f64 + 0.5) / new_width as f64 * w as f64 - 0.5;
        let sy = (y as f64 + 0.5) / new_height as f64 * h as f64 - 0.5;
        let x0 = sx.floor();
        let y0 = sy.floor();
        let fx = sx - x0;
        let fy = sy - y0;
        let cx0 = (x0 as isize).clamp(0, w as isize - 1) as usize;
        let cx1 = (x0 as isize + 1).clamp(0, w as isize - 1) as usize;
        let cy0 = (y0 as isize).clamp(0, h as isize - 1) as usize;
        let cy1 = (y0 as isize + 1).clamp(0, h as isize - 1) as usize;
        let blend = |a: Rgb, b: Rgb, t: f64| a * (1.0 - t) as f32 + b * t as f32;
        let top = blend(img.pixel(cx0, cy0), img.pixel(cx1, cy0), fx);
        let bot = blend(img.pixel(cx0, cy1), img.pixel(cx1, cy1), fx);
        blend(top, bot, fy)
    });
    Ok(out)
}

/// Equirectangular HDR radiance panorama.
///
/// Invariants: `width == 2 * height`, every channel finite and `>= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentMap {
    image: ImageRgb,
}

impl EnvironmentMap {
    pub fn new(image: ImageRgb) -> Result<Self> {
        if image.height() == 0 || image.width() != 2 * image.height() {
            return Err(Error::Invariant(format!(
                "environment map must be non-empty 2:1 equirectangular, got {}x{}",
                image.width(),
                image.height()
            )));
        }
        for (i, p) in image.pixels().iter().enumerate() {
            if !p.is_finite() || p.r < 0.0 || p.g < 0.0 || p.b < 0.0 {
                return Err(Error::Invariant(format!(
                    "radiance at pixel {} is not finite and non-negative: ({}, {}, {})",
                    i, p.r, p.g, p.b
                )));
            }
        }
        Ok(EnvironmentMap { image })
    }

    /// Builds a `height*2 x height` map by evaluating `f(x, y)`.
    pub fn from_fn(height: usize, f: impl FnMut(usize, usize) -> Rgb) -> Result<Self> {
        EnvironmentMap::new(ImageRgb::from_fn(height * 2, height, f))
    }

    pub fn filled(height: usize, value: Rgb) -> Result<Self> {
        EnvironmentMap::new(ImageRgb::filled(height * 2, height, value))
    }

    pub fn image(&self) -> &ImageRgb {
        &self.image
    }

    pub fn into_image(self) -> ImageRgb {
        self.image
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.image.pixel(x, y)
    }
}

/// RGB image with all channels in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LdrImage {
    image: ImageRgb,
}

impl LdrImage {
    pub fn new(image: ImageRgb) -> Result<Self> {
        for (i, p) in image.pixels().iter().enumerate() {
            let ok = p.is_finite()
                && (0.0..=1.0).contains(&p.r)
                && (0.0..=1.0).contains(&p.g)
                && (0.0..=1.0).contains(&p.b);
            if !ok {
                return Err(Error::Invariant(format!(
                    "ldr value at pixel {} outside [0,1]: ({}, {}, {})",
                    i, p.r, p.g, p.b
                )));
            }
        }
        Ok(LdrImage { image })
    }

    pub fn image(&self) -> &ImageRgb {
        &self.image
    }

    pub fn into_image(self) -> ImageRgb {
        self.image
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.image.pixel(x, y)
    }
}

/// Quantizes an LDR value to 8 bits: v -> round(v * 255).
#[inline]
pub fn quantize_u8(v: f32) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Writes an LDR image as an 8-bit RGB PNG.
pub fn write_png_ldr(img: &LdrImage, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = Vec::with_capacity(img.width() * img.height() * 3);
    for p in img.image().pixels() {
        bytes.push(quantize_u8(p.r));
        bytes.push(quantize_u8(p.g));
        bytes.push(quantize_u8(p.b));
    }
    let buf: image::RgbImage =
        image::ImageBuffer::from_raw(img.width() as u32, img.height() as u32, bytes)
            .expect("buffer sized from image dims");
    buf.save_with_format(path.as_ref(), image::ImageFormat::Png)
        .map_err(|e| Error::PngEncode(e.to_string()))
}

/// Writes an 8-bit grayscale PNG (used for coverage masks).
pub fn write_png_gray(
    width: usize,
    height: usize,
    values: &[u8],
    path: impl AsRef<Path>,
) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::DimMismatch(format!(
            "gray buffer has {} entries, expected {}",
            values.len(),
            width * height
        )));
    }
    let buf: image::GrayImage =
        image::ImageBuffer::from_raw(width as u32, height as u32, values.to_vec())
            .expect("buffer sized from image dims");
    buf.save_with_format(path.as_ref(), image::ImageFormat::Png)
        .map_err(|e| Error::PngEncode(e.to_string()))
}
