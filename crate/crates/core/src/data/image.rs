//! Grayscale images and the pixel-level preprocessing steps.

use crate::error::{Error, Result};
use crate::feature_map::FeatureMap;

/// Row-major grayscale pixels in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage(format!("empty image {height}x{width}")));
        }
        if pixels.len() != height * width {
            return Err(Error::InvalidImage(format!("{} pixels for a {height}x{width} image", pixels.len())));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=255.0).contains(*p)) {
            return Err(Error::InvalidImage(format!("pixel value {p} outside [0, 255]")));
        }
        Ok(GrayImage { height, width, pixels })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.pixels.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)))
    }
}

#[inline]
fn lerp_clamped(a: f64, b: f64, t: f64) -> f64 {
    (a + t * (b - a)).clamp(a.min(b), a.max(b))
}

/// Edge-clamped bilinear resampling with pixel-centre alignment: destination
/// pixel `d` samples source coordinate `(d + 0.5)·(in/out) − 0.5`.
pub fn resize_bilinear(img: &GrayImage, out_h: usize, out_w: usize) -> GrayImage {
    assert!(out_h >= 1 && out_w >= 1, "resize to an empty image");
    if out_h == img.height && out_w == img.width {
        return img.clone();
    }
    let axis = |out: usize, input: usize| -> Vec<(usize, usize, f64)> {
        let scale = input as f64 / out as f64;
        (0..out)
            .map(|d| {
                let src = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (input - 1) as f64);
                let lo = src.floor() as usize;
                let hi = (lo + 1).min(input - 1);
                (lo, hi, src - lo as f64)
            })
            .collect()
    };
    let rows = axis(out_h, img.height);
    let cols = axis(out_w, img.width);
    let mut pixels = Vec::with_capacity(out_h * out_w);
    for &(r0, r1, fy) in &rows {
        for &(c0, c1, fx) in &cols {
            let top = lerp_clamped(img.get(r0, c0), img.get(r0, c1), fx);
            let bottom = lerp_clamped(img.get(r1, c0), img.get(r1, c1), fx);
            pixels.push(lerp_clamped(top, bottom, fy));
        }
    }
    GrayImage { height: out_h, width: out_w, pixels }
}

/// Maps `[0, 255]` onto `[−1, 1]` as a single-sub-layer feature map.
pub fn normalize(img: &GrayImage) -> FeatureMap {
    let values = img.pixels.iter().map(|&p| p / 127.5 - 1.0).collect();
    FeatureMap::from_vec(1, img.height, img.width, values).expect("image dimensions are positive")
}

/// Inverse of [`normalize`].
pub fn denormalize(map: &FeatureMap) -> Result<GrayImage> {
    if map.sublayers() != 1 {
        return Err(Error::ShapeMismatch(format!("expected one sub-layer, got {}", map.sublayers())));
    }
    let pixels = map.values().iter().map(|&v| ((v + 1.0) * 127.5).clamp(0.0, 255.0)).collect();
    GrayImage::new(map.height(), map.width(), pixels)
}

/// Centred `size × size` mean filter with replicated borders. `size` must
/// be odd; see [`box_blur`] for even sizes.
pub fn mean_filter(img: &GrayImage, size: usize) -> Result<GrayImage> {
    if size % 2 == 0 {
        return Err(Error::EvenFilterSize(size));
    }
    box_blur(img, size)
}

/// Box blur of any size ≥ 1 with replicated borders.
///
/// The window of pixel `(r, c)` spans rows `r − size/2 ..= r − size/2 + size − 1`
/// (integer division), which is centred for odd sizes and leans one pixel
/// towards the top-left for even sizes, matching the usual box-filter anchor.
pub fn box_blur(img: &GrayImage, size: usize) -> Result<GrayImage> {
    if size == 0 || size > 2 * img.height.min(img.width) {
        return Err(Error::FilterTooLarge { size, height: img.height, width: img.width });
    }
    if size == 1 {
        return Ok(img.clone());
    }
    let (lo, hi) = img.min_max();
    let half = (size / 2) as isize;
    let clamp = |x: isize, n: usize| x.clamp(0, n as isize - 1) as usize;
    let area = (size * size) as f64;
    let mut pixels = Vec::with_capacity(img.pixels.len());
    for r in 0..img.height {
        for c in 0..img.width {
            let mut acc = 0.0;
            for dr in 0..size as isize {
                let rr = clamp(r as isize - half + dr, img.height);
                for dc in 0..size as isize {
                    acc += img.get(rr, clamp(c as isize - half + dc, img.width));
                }
            }
            pixels.push((acc / area).clamp(lo, hi));
        }
    }
    Ok(GrayImage { height: img.height, width: img.width, pixels })
}
