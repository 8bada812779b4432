//! Binary PPM (P6) and PGM (P5) with maxval 255.
//!
//! Headers are parsed per the netpbm grammar (whitespace-separated fields,
//! `#` comments to end of line, one whitespace byte before the raster) and
//! always written in the canonical `P6\n<w> <h>\n255\n` form.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// Binary RGB.
    P6,
    /// Binary grayscale.
    P5,
}

struct Header {
    format: ImageFormat,
    width: usize,
    height: usize,
    raster_start: usize,
}

fn decode_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Decode { offset, reason: reason.into() }
}

fn skip_space_and_comments(bytes: &[u8], mut at: usize) -> usize {
    while at < bytes.len() {
        match bytes[at] {
            b'#' => {
                while at < bytes.len() && bytes[at] != b'\n' {
                    at += 1;
                }
            }
            b if b.is_ascii_whitespace() => at += 1,
            _ => break,
        }
    }
    at
}

fn read_number(bytes: &[u8], at: usize, field: &str) -> Result<(usize, usize)> {
    let start = skip_space_and_comments(bytes, at);
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return Err(decode_err(start, format!("expected {field}")));
    }
    let text = std::str::from_utf8(&bytes[start..end]).expect("ascii digits");
    let value = text.parse::<usize>().map_err(|_| decode_err(start, format!("{field} out of range")))?;
    Ok((value, end))
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let format = match bytes.get(..2) {
        Some(b"P6") => ImageFormat::P6,
        Some(b"P5") => ImageFormat::P5,
        _ => return Err(decode_err(0, "bad magic; expected P6 or P5")),
    };
    let (width, at) = read_number(bytes, 2, "width")?;
    let (height, at) = read_number(bytes, at, "height")?;
    let (maxval, at) = read_number(bytes, at, "maxval")?;
    if width == 0 || height == 0 {
        return Err(decode_err(2, "zero image extent"));
    }
    if maxval != 255 {
        return Err(decode_err(at, format!("maxval {maxval} unsupported; expected 255")));
    }
    match bytes.get(at) {
        Some(b) if b.is_ascii_whitespace() => {}
        _ => return Err(decode_err(at, "missing whitespace before raster")),
    }
    Ok(Header { format, width, height, raster_start: at + 1 })
}

fn read_raster(bytes: &[u8], header: &Header, channels: usize) -> Result<Vec<f64>> {
    let plane = header.width * header.height;
    let need = plane * channels;
    let raster = &bytes[header.raster_start..];
    if raster.len() < need {
        return Err(decode_err(
            bytes.len(),
            format!("truncated raster: {} of {need} bytes", raster.len()),
        ));
    }
    let mut data = vec![0.0; need];
    for (pixel, chunk) in raster[..need].chunks_exact(channels).enumerate() {
        for (c, &b) in chunk.iter().enumerate() {
            data[c * plane + pixel] = b as f64 / 255.0;
        }
    }
    Ok(data)
}

/// Decodes a P6 image into a channel-major `[3, H, W]` tensor in `[0, 1]`.
pub fn decode_ppm(bytes: &[u8]) -> Result<Tensor> {
    let header = parse_header(bytes)?;
    if header.format != ImageFormat::P6 {
        return Err(decode_err(0, "expected P6, found P5"));
    }
    let data = read_raster(bytes, &header, 3)?;
    Tensor::from_vec(&[3, header.height, header.width], data)
}

/// Decodes a P5 image into an `[H, W]` tensor in `[0, 1]`.
pub fn decode_pgm(bytes: &[u8]) -> Result<Tensor> {
    let header = parse_header(bytes)?;
    if header.format != ImageFormat::P5 {
        return Err(decode_err(0, "expected P5, found P6"));
    }
    let data = read_raster(bytes, &header, 1)?;
    Tensor::from_vec(&[header.height, header.width], data)
}

/// Maps `[0, 1]` to a byte with round-half-up.
pub fn to_byte(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor() as u8
}

/// Encodes a `[3, H, W]` tensor as P6 or an `[H, W]` (or `[1, H, W]`) tensor as P5.
pub fn encode_image(image: &Tensor, format: ImageFormat) -> Result<Vec<u8>> {
    let (channels, height, width) = match (format, image.shape()) {
        (ImageFormat::P6, &[3, h, w]) => (3, h, w),
        (ImageFormat::P5, &[h, w]) | (ImageFormat::P5, &[1, h, w]) => (1, h, w),
        (f, s) => return Err(Error::Encode(format!("{f:?} cannot hold a tensor of shape {s:?}"))),
    };
    if let Some(bad) = image.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Encode(format!("value {bad} is outside [0, 1]")));
    }
    let magic = if channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    let plane = width * height;
    out.reserve(plane * channels);
    let d = image.data();
    for pixel in 0..plane {
        for c in 0..channels {
            out.push(to_byte(d[c * plane + pixel]));
        }
    }
    Ok(out)
}
