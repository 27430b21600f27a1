//! PGM (binary `P5`) and grayscale PFM (`Pf`) reading and writing.
//!
//! Integer samples are normalized to `[0, 1]` by dividing by the file's
//! maxval. PFM samples are 32-bit floats stored bottom row first; files are
//! written little-endian (negative scale).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm8,
    Pgm16,
    Pfm,
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn save_image(img: &Image, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(img, format)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Decodes PGM or PFM bytes, dispatching on the magic number.
pub fn decode(bytes: &[u8]) -> Result<Image> {
    match bytes.get(..2) {
        Some(b"P5") => decode_pgm(bytes),
        Some(b"Pf") => decode_pfm(bytes),
        Some(b"PF") => Err(Error::Format {
            format: "PFM",
            reason: "color PFM is not supported".into(),
        }),
        _ => Err(Error::Format {
            format: "image",
            reason: "unrecognized magic number".into(),
        }),
    }
}

pub fn encode(img: &Image, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Pgm8 => Ok(encode_pgm(img, 255)),
        ImageFormat::Pgm16 => Ok(encode_pgm(img, 65535)),
        ImageFormat::Pfm => encode_pfm(img),
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
    format: &'static str,
}

impl<'a> Header<'a> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            format: self.format,
            reason: reason.into(),
        }
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("unexpected end of header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| self.err("non-ASCII header"))
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| self.err(format!("invalid {what} `{tok}`")))
    }

    /// Consumes the single whitespace byte separating header and raster.
    fn end_header(&mut self) -> Result<usize> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(self.pos + 1),
            _ => Err(self.err("missing whitespace after header")),
        }
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut hdr = Header {
        bytes,
        pos: 2,
        format: "PGM",
    };
    let width: usize = hdr.number("width")?;
    let height: usize = hdr.number("height")?;
    let maxval: u32 = hdr.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(hdr.err("zero dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(hdr.err(format!("maxval {maxval} out of range")));
    }
    let start = hdr.end_header()?;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| hdr.err("dimensions overflow"))?;
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    let raster = &bytes[start..];
    if raster.len() < n * sample_bytes {
        return Err(hdr.err(format!(
            "truncated raster: need {} bytes, have {}",
            n * sample_bytes,
            raster.len()
        )));
    }
    let scale = maxval as f64;
    let data: Vec<f64> = if sample_bytes == 1 {
        raster[..n].iter().map(|&b| (b as f64 / scale).min(1.0)).collect()
    } else {
        raster[..2 * n]
            .chunks_exact(2)
            .map(|c| (u16::from_be_bytes([c[0], c[1]]) as f64 / scale).min(1.0))
            .collect()
    };
    Image::new(width, height, data)
}

fn encode_pgm(img: &Image, maxval: u32) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), maxval).into_bytes();
    let scale = maxval as f64;
    let quantize = |v: f64| (v.clamp(0.0, 1.0) * scale).round() as u32;
    if maxval < 256 {
        out.extend(img.data().iter().map(|&v| quantize(v) as u8));
    } else {
        for &v in img.data() {
            out.extend_from_slice(&(quantize(v) as u16).to_be_bytes());
        }
    }
    out
}

fn decode_pfm(bytes: &[u8]) -> Result<Image> {
    let mut hdr = Header {
        bytes,
        pos: 2,
        format: "PFM",
    };
    let width: usize = hdr.number("width")?;
    let height: usize = hdr.number("height")?;
    let scale: f64 = hdr.number("scale")?;
    if width == 0 || height == 0 {
        return Err(hdr.err("zero dimension"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(hdr.err("scale must be finite and non-zero"));
    }
    let little_endian = scale < 0.0;
    let start = hdr.end_header()?;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| hdr.err("dimensions overflow"))?;
    let raster = &bytes[start..];
    if raster.len() < 4 * n {
        return Err(hdr.err(format!(
            "truncated raster: need {} bytes, have {}",
            4 * n,
            raster.len()
        )));
    }
    let mut data = vec![0.0; n];
    for (file_row, chunk) in raster[..4 * n].chunks_exact(4 * width).enumerate() {
        let y = height - 1 - file_row;
        for (x, c) in chunk.chunks_exact(4).enumerate() {
            let raw = [c[0], c[1], c[2], c[3]];
            let v = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            data[y * width + x] = v as f64;
        }
    }
    Image::new(width, height, data).map_err(|_| hdr.err("non-finite sample"))
}

fn encode_pfm(img: &Image) -> Result<Vec<u8>> {
    let (w, h) = (img.width(), img.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * w * h);
    for y in (0..h).rev() {
        for x in 0..w {
            let v = img.get(x, y) as f32;
            if !v.is_finite() {
                return Err(Error::Format {
                    format: "PFM",
                    reason: format!("sample {} at ({x}, {y}) overflows f32", img.get(x, y)),
                });
            }
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}
