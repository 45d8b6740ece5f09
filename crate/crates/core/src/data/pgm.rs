//! Binary PGM (`P5`) with 8-bit samples.

use crate::data::image::GrayImage;
use crate::error::{Error, Result};

fn skip_space_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn read_number(bytes: &[u8], pos: usize, what: &str) -> Result<(u32, usize)> {
    let start = skip_space_and_comments(bytes, pos);
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return Err(Error::InvalidImage(format!("PGM header: missing {what}")));
    }
    let text = std::str::from_utf8(&bytes[start..end]).expect("ascii digits");
    let value = text.parse().map_err(|_| Error::InvalidImage(format!("PGM header: {what} {text} too large")))?;
    Ok((value, end))
}

/// Decodes a binary PGM. Samples are rescaled to `[0, 255]` when the file's
/// maxval is below 255; bytes after the first image are ignored.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::BadMagic { expected: "P5" });
    }
    let (width, pos) = read_number(bytes, 2, "width")?;
    let (height, pos) = read_number(bytes, pos, "height")?;
    let (maxval, pos) = read_number(bytes, pos, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage(format!("PGM header: empty image {width}x{height}")));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::InvalidImage("PGM header: missing separator before payload".into()));
    }
    let payload = &bytes[pos + 1..];
    let n = width as usize * height as usize;
    if payload.len() < n {
        return Err(Error::TruncatedPayload { expected: n, found: payload.len() });
    }
    let scale = 255.0 / maxval as f64;
    let pixels = payload[..n]
        .iter()
        .map(|&b| if maxval == 255 { b as f64 } else { (b as f64 * scale).min(255.0) })
        .collect();
    GrayImage::new(height as usize, width as usize, pixels)
}

/// Encodes with maxval 255, rounding pixels to the nearest integer.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|&p| p.round().clamp(0.0, 255.0) as u8));
    out
}
