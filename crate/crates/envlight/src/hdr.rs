//! Radiance RGBE (.hdr) reading and writing.
//!
//! Supported layout: `#?RADIANCE` / `#?RGBE` magic, header lines up to a
//! blank line, a `-Y H +X W` resolution line, then scanlines that are either
//! flat RGBE quadruples or new-style RLE. Other orientations and old-style
//! RLE are rejected with a structured error carrying the byte offset.
//!
//! Decoding follows the shared-exponent rule
//! `channel = (mantissa / 256) * 2^(exponent - 128)`, with exponent byte 0
//! meaning black. `EXPOSURE` and `GAMMA` header fields are parsed and
//! ignored: pixel values are treated as already-linear radiance.
//!
//! Encoding quantizes once and is then stable: rewriting a decoded file
//! reproduces the decoded pixels bit-exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{EnvironmentMap, ImageRgb, Rgb};

const MAX_DIM: usize = 1 << 20;

/// Decodes one RGBE quadruple to linear RGB.
#[inline]
pub fn rgbe_decode(q: [u8; 4]) -> Rgb {
    if q[3] == 0 {
        return Rgb::BLACK;
    }
    let scale = f32::powi(2.0, q[3] as i32 - 136); // 2^(e-128) / 256
    Rgb::new(q[0] as f32 * scale, q[1] as f32 * scale, q[2] as f32 * scale)
}

/// Encodes linear RGB to an RGBE quadruple (lossy; stable after one pass).
pub fn rgbe_encode(c: Rgb) -> [u8; 4] {
    let max = c.max_channel();
    if max < 1e-32 {
        return [0, 0, 0, 0];
    }
    let (mantissa, exp) = frexp(max);
    if exp < -127 {
        return [0, 0, 0, 0]; // exponent byte would underflow: darker than representable
    }
    if exp > 127 {
        // brighter than representable: saturate at the format ceiling
        let s = 255.0 / max;
        return [
            (c.r * s) as u8,
            (c.g * s) as u8,
            (c.b * s) as u8,
            255,
        ];
    }
    let scale = mantissa * 256.0 / max;
    [
        (c.r * scale) as u8,
        (c.g * scale) as u8,
        (c.b * scale) as u8,
        (exp + 128) as u8,
    ]
}

/// Splits a positive finite float into (mantissa, exponent) with
/// `x == mantissa * 2^exponent` and mantissa in [0.5, 1).
fn frexp(x: f32) -> (f32, i32) {
    debug_assert!(x > 0.0 && x.is_finite());
    let (x, offset) = if x < f32::MIN_POSITIVE {
        (x * f32::powi(2.0, 64), -64)
    } else {
        (x, 0)
    };
    let bits = x.to_bits();
    let exp = ((bits >> 23) & 0xff) as i32 - 126;
    let mantissa = f32::from_bits((bits & 0x807f_ffff) | (126 << 23));
    (mantissa, exp + offset)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Cursor { bytes, pos: 0 }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::hdr(self.pos, msg)
    }

    fn byte(&mut self) -> Result<u8> {
        let b = *self
            .bytes
            .get(self.pos)
            .ok_or_else(|| Error::hdr(self.pos, "unexpected end of file"))?;
        self.pos += 1;
        Ok(b)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::hdr(self.pos, "unexpected end of file"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    /// Reads a header line up to `\n` (tolerating `\r\n`), ASCII only.
    fn line(&mut self) -> Result<String> {
        let start = self.pos;
        loop {
            let b = self.byte()?;
            if b == b'\n' {
                let mut end = self.pos - 1;
                if end > start && self.bytes[end - 1] == b'\r' {
                    end -= 1;
                }
                let s = &self.bytes[start..end];
                if !s.is_ascii() {
                    return Err(Error::hdr(start, "non-ascii bytes in header line"));
                }
                return Ok(String::from_utf8_lossy(s).into_owned());
            }
            if self.pos - start > 4096 {
                return Err(Error::hdr(start, "header line exceeds 4096 bytes"));
            }
        }
    }
}

/// Parses an in-memory Radiance HDR file.
pub fn parse_hdr(bytes: &[u8]) -> Result<ImageRgb> {
    let mut cur = Cursor::new(bytes);

    let magic = cur.line()?;
    if !(magic.starts_with("#?RADIANCE") || magic.starts_with("#?RGBE")) {
        return Err(Error::hdr(0, "missing #?RADIANCE / #?RGBE magic"));
    }

    // Header lines until the blank separator. EXPOSURE/GAMMA are ignored.
    loop {
        let at = cur.pos;
        let line = cur.line()?;
        let line = line.trim();
        if line.is_empty() {
            break;
        }
        if line.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            if key.trim().eq_ignore_ascii_case("FORMAT")
                && value.trim() != "32-bit_rle_rgbe"
            {
                return Err(Error::hdr(at, format!("unsupported FORMAT '{}'", value.trim())));
            }
        }
    }

    let res_at = cur.pos;
    let res = cur.line()?;
    let parts: Vec<&str> = res.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "-Y" || parts[2] != "+X" {
        return Err(Error::hdr(
            res_at,
            format!("unsupported resolution line '{}', expected '-Y H +X W'", res),
        ));
    }
    let height: usize = parts[1]
        .parse()
        .map_err(|_| Error::hdr(res_at, "invalid height"))?;
    let width: usize = parts[3]
        .parse()
        .map_err(|_| Error::hdr(res_at, "invalid width"))?;
    if width == 0 || height == 0 || width > MAX_DIM || height > MAX_DIM {
        return Err(Error::hdr(res_at, "resolution out of range"));
    }

    let mut pixels = Vec::with_capacity(width * height);
    let mut scanline = vec![[0u8; 4]; width];
    for _ in 0..height {
        read_scanline(&mut cur, width, &mut scanline)?;
        pixels.extend(scanline.iter().map(|&q| rgbe_decode(q)));
    }
    ImageRgb::new(width, height, pixels)
}

fn read_scanline(cur: &mut Cursor, width: usize, out: &mut [[u8; 4]]) -> Result<()> {
    let head: [u8; 4] = cur.take(4)?.try_into().expect("take(4)");
    let is_rle = head[0] == 2
        && head[1] == 2
        && ((head[2] as usize) << 8 | head[3] as usize) == width
        && (8..=0x7fff).contains(&width);
    if is_rle {
        return read_rle_components(cur, width, out);
    }
    if head[0] == 1 && head[1] == 1 && head[2] == 1 {
        return Err(cur.err("old-style RLE scanlines are not supported"));
    }
    out[0] = head;
    for q in out.iter_mut().skip(1) {
        *q = cur.take(4)?.try_into().expect("take(4)");
    }
    Ok(())
}

fn read_rle_components(cur: &mut Cursor, width: usize, out: &mut [[u8; 4]]) -> Result<()> {
    for component in 0..4 {
        let mut pos = 0usize;
        while pos < width {
            let count = cur.byte()? as usize;
            if count > 128 {
                let run = count - 128;
                if pos + run > width {
                    return Err(cur.err("rle run exceeds scanline width"));
                }
                let value = cur.byte()?;
                for q in &mut out[pos..pos + run] {
                    q[component] = value;
                }
                pos += run;
            } else {
                if count == 0 {
                    return Err(cur.err("zero-length literal run"));
                }
                if pos + count > width {
                    return Err(cur.err("literal run exceeds scanline width"));
                }
                let values = cur.take(count)?;
                for (q, &v) in out[pos..pos + count].iter_mut().zip(values) {
                    q[component] = v;
                }
                pos += count;
            }
        }
    }
    Ok(())
}

/// Encodes an image as Radiance HDR bytes. RLE is used for widths in
/// [8, 0x7fff], flat scanlines otherwise. Fails on non-finite or negative
/// values before producing any output.
pub fn encode_hdr(img: &ImageRgb) -> Result<Vec<u8>> {
    for (i, p) in img.pixels().iter().enumerate() {
        if !p.is_finite() || p.r < 0.0 || p.g < 0.0 || p.b < 0.0 {
            return Err(Error::Invariant(format!(
                "pixel {} is not finite non-negative radiance",
                i
            )));
        }
    }
    let width = img.width();
    let height = img.height();
    let mut out = Vec::with_capacity(width * height * 2 + 64);
    out.extend_from_slice(b"#?RADIANCE\n");
    out.extend_from_slice(b"FORMAT=32-bit_rle_rgbe\n\n");
    out.extend_from_slice(format!("-Y {} +X {}\n", height, width).as_bytes());

    let use_rle = (8..=0x7fff).contains(&width);
    let mut scanline = vec![[0u8; 4]; width];
    let mut channel = vec![0u8; width];
    for y in 0..height {
        for (x, q) in scanline.iter_mut().enumerate() {
            *q = rgbe_encode(img.pixel(x, y));
        }
        if use_rle {
            out.extend_from_slice(&[2, 2, (width >> 8) as u8, (width & 0xff) as u8]);
            for component in 0..4 {
                for (x, q) in scanline.iter().enumerate() {
                    channel[x] = q[component];
                }
                encode_rle_channel(&channel, &mut out);
            }
        } else {
            for q in &scanline {
                out.extend_from_slice(q);
            }
        }
    }
    Ok(out)
}

/// RLE for one component of one scanline: runs of >= 4 identical bytes are
/// emitted as (128+len, value); everything else as literal blocks.
fn encode_rle_channel(data: &[u8], out: &mut Vec<u8>) {
    let mut i = 0usize;
    while i < data.len() {
        let mut run = 1usize;
        while i + run < data.len() && run < 127 && data[i + run] == data[i] {
            run += 1;
        }
        if run >= 4 {
            out.push((128 + run) as u8);
            out.push(data[i]);
            i += run;
            continue;
        }
        let start = i;
        let mut literal = 0usize;
        while i < data.len() && literal < 128 {
            let mut next_run = 1usize;
            while i + next_run < data.len() && next_run < 127 && data[i + next_run] == data[i] {
                next_run += 1;
            }
            if next_run >= 4 {
                break;
            }
            i += 1;
            literal += 1;
        }
        out.push(literal as u8);
        out.extend_from_slice(&data[start..start + literal]);
    }
}

/// Reads a Radiance HDR file as a plain image (any dimensions).
pub fn read_hdr_image(path: impl AsRef<Path>) -> Result<ImageRgb> {
    let bytes = std::fs::read(path)?;
    parse_hdr(&bytes)
}

/// Writes a plain image as Radiance HDR.
pub fn write_hdr_image(img: &ImageRgb, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_hdr(img)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads an equirectangular environment map (validates the 2:1 aspect and
/// value invariants on top of the raw decode).
pub fn read_hdr(path: impl AsRef<Path>) -> Result<EnvironmentMap> {
    EnvironmentMap::new(read_hdr_image(path)?)
}

/// Writes an environment map as Radiance HDR.
pub fn write_hdr(map: &EnvironmentMap, path: impl AsRef<Path>) -> Result<()> {
    write_hdr_image(map.image(), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_rule_examples() {
        // (mantissa/256) * 2^(e-128)
        assert_eq!(rgbe_decode([128, 0, 0, 129]), Rgb::new(1.0, 0.0, 0.0));
        assert_eq!(rgbe_decode([0, 0, 0, 0]), Rgb::BLACK);
        // zero exponent wins even with nonzero mantissas
        assert_eq!(rgbe_decode([10, 20, 30, 0]), Rgb::BLACK);
    }

    #[test]
    fn encode_half_is_canonical() {
        let q = rgbe_encode(Rgb::splat(0.5));
        assert_eq!(q, [128, 128, 128, 128]);
        let back = rgbe_decode(q);
        assert_eq!(back, Rgb::splat(0.5));
    }

    #[test]
    fn encode_decode_within_one_mantissa_step() {
        for &v in &[0.001f32, 0.1, 0.6, 1.0, 3.7, 60000.0, 1e-6, 1e6] {
            let c = Rgb::new(v, v * 0.5, v * 0.25);
            let d = rgbe_decode(rgbe_encode(c));
            let step = f32::powi(2.0, (rgbe_encode(c)[3] as i32) - 136);
            assert!((d.r - c.r).abs() <= step, "v={} got {} want {}", v, d.r, c.r);
            assert!((d.g - c.g).abs() <= step);
            assert!((d.b - c.b).abs() <= step);
        }
    }

    #[test]
    fn encode_is_stable_after_one_pass() {
        for &v in &[0.3f32, 1.0, 2.5, 123.456, 59999.0] {
            let first = rgbe_encode(Rgb::new(v, v / 3.0, v / 7.0));
            let second = rgbe_encode(rgbe_decode(first));
            assert_eq!(first, second, "v={}", v);
        }
        // denormalized mantissas re-normalize but keep the decoded value
        let decoded = rgbe_decode([3, 1, 0, 130]);
        let again = rgbe_decode(rgbe_encode(decoded));
        assert_eq!(decoded, again);
    }

    #[test]
    fn tiny_values_go_black() {
        assert_eq!(rgbe_encode(Rgb::splat(1e-33)), [0, 0, 0, 0]);
        assert_eq!(rgbe_encode(Rgb::BLACK), [0, 0, 0, 0]);
    }

    #[test]
    fn roundtrip_2x1() {
        let img = ImageRgb::new(
            2,
            1,
            vec![Rgb::splat(1.0), Rgb::BLACK],
        )
        .unwrap();
        let bytes = encode_hdr(&img).unwrap();
        let back = parse_hdr(&bytes).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn nan_rejected_before_writing() {
        let img = ImageRgb::new(2, 1, vec![Rgb::new(f32::NAN, 0.0, 0.0), Rgb::BLACK]).unwrap();
        assert!(encode_hdr(&img).is_err());
    }

    #[test]
    fn rejects_bad_magic_and_orientation() {
        assert!(matches!(
            parse_hdr(b"#?NOPE\n\n-Y 1 +X 2\n"),
            Err(Error::HdrParse { .. })
        ));
        let e = parse_hdr(b"#?RADIANCE\n\n+Y 1 +X 2\n\0\0\0\0\0\0\0\0");
        assert!(matches!(e, Err(Error::HdrParse { .. })));
    }

    #[test]
    fn rejects_truncated_scanline_with_offset() {
        // header announces 4x1 but provides a single pixel
        let mut bytes = b"#?RADIANCE\n\n-Y 1 +X 4\n".to_vec();
        bytes.extend_from_slice(&[128, 128, 128, 128]);
        match parse_hdr(&bytes) {
            Err(Error::HdrParse { offset, .. }) => assert!(offset >= 23, "offset {}", offset),
            other => panic!("expected parse error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn rejects_rle_overrun() {
        // RLE header then a run longer than the scanline
        let mut bytes = b"#?RADIANCE\n\n-Y 1 +X 8\n".to_vec();
        bytes.extend_from_slice(&[2, 2, 0, 8]);
        bytes.extend_from_slice(&[128 + 9, 42]);
        assert!(matches!(parse_hdr(&bytes), Err(Error::HdrParse { .. })));
    }

    #[test]
    fn flat_scanlines_used_below_rle_width() {
        let img = ImageRgb::filled(4, 2, Rgb::splat(0.25));
        let bytes = encode_hdr(&img).unwrap();
        let back = parse_hdr(&bytes).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn exposure_and_gamma_headers_ignored() {
        let mut bytes = b"#?RADIANCE\nEXPOSURE=2.5\nGAMMA=2.2\n\n-Y 1 +X 2\n".to_vec();
        bytes.extend_from_slice(&[128, 128, 128, 128]);
        bytes.extend_from_slice(&[0, 0, 0, 0]);
        let img = parse_hdr(&bytes).unwrap();
        assert_eq!(img.pixel(0, 0), Rgb::splat(0.5));
    }
}
