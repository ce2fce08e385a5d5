use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};

use super::{read_bytes, write_bytes};
use crate::geometry::DepthMap;
use crate::{Error, Result};

/// Encodes a single-channel little-endian PFM (scale -1.0). Invalid pixels
/// are written as 0.
pub fn encode_pfm(depth: &DepthMap) -> Vec<u8> {
    let (w, h) = (depth.width(), depth.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    let header = out.len();
    out.resize(header + w * h * 4, 0);
    // PFM rows run bottom to top.
    for (row, y) in (0..h).rev().enumerate() {
        for x in 0..w {
            let v = depth.get(x, y).unwrap_or(0.0);
            let at = header + (row * w + x) * 4;
            LittleEndian::write_f32(&mut out[at..at + 4], v);
        }
    }
    out
}

fn next_token(bytes: &[u8], pos: &mut usize) -> std::result::Result<String, String> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err("truncated PFM header".into());
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

/// Decodes a grayscale PFM; either byte order is accepted.
pub fn decode_pfm(bytes: &[u8]) -> std::result::Result<DepthMap, String> {
    let mut pos = 0;
    let tag = next_token(bytes, &mut pos)?;
    if tag != "Pf" {
        return Err(format!("expected grayscale PFM tag 'Pf', found '{tag}'"));
    }
    let w: usize = next_token(bytes, &mut pos)?
        .parse()
        .map_err(|e| format!("bad width: {e}"))?;
    let h: usize = next_token(bytes, &mut pos)?
        .parse()
        .map_err(|e| format!("bad height: {e}"))?;
    let scale: f64 = next_token(bytes, &mut pos)?
        .parse()
        .map_err(|e| format!("bad scale: {e}"))?;
    if w == 0 || h == 0 || scale == 0.0 || !scale.is_finite() {
        return Err(format!("invalid PFM header ({w}x{h}, scale {scale})"));
    }
    // Exactly one whitespace byte separates the header from the payload.
    pos += 1;
    let payload = bytes.get(pos..).unwrap_or(&[]);
    if payload.len() != w * h * 4 {
        return Err(format!("payload is {} bytes, expected {}", payload.len(), w * h * 4));
    }
    let mut values = vec![0f32; w * h];
    for (row, y) in (0..h).rev().enumerate() {
        for x in 0..w {
            let at = (row * w + x) * 4;
            let chunk = &payload[at..at + 4];
            values[y * w + x] = if scale < 0.0 {
                LittleEndian::read_f32(chunk)
            } else {
                BigEndian::read_f32(chunk)
            };
        }
    }
    DepthMap::from_values(w, h, values).map_err(|e| e.to_string())
}

/// Raw float32 depth: `u32 width, u32 height` (little-endian) followed by
/// row-major little-endian samples.
pub fn encode_raw_depth(depth: &DepthMap) -> Vec<u8> {
    let (w, h) = (depth.width(), depth.height());
    let mut out = vec![0u8; 8 + w * h * 4];
    LittleEndian::write_u32(&mut out[0..4], w as u32);
    LittleEndian::write_u32(&mut out[4..8], h as u32);
    for y in 0..h {
        for x in 0..w {
            let at = 8 + (y * w + x) * 4;
            LittleEndian::write_f32(&mut out[at..at + 4], depth.get(x, y).unwrap_or(0.0));
        }
    }
    out
}

pub fn decode_raw_depth(bytes: &[u8]) -> std::result::Result<DepthMap, String> {
    if bytes.len() < 8 {
        return Err("truncated raw depth header".into());
    }
    let w = LittleEndian::read_u32(&bytes[0..4]) as usize;
    let h = LittleEndian::read_u32(&bytes[4..8]) as usize;
    if w == 0 || h == 0 || bytes.len() - 8 != w * h * 4 {
        return Err(format!(
            "raw depth {w}x{h} does not match payload of {} bytes",
            bytes.len() - 8
        ));
    }
    let values = bytes[8..].chunks_exact(4).map(LittleEndian::read_f32).collect();
    DepthMap::from_values(w, h, values).map_err(|e| e.to_string())
}

fn is_pfm(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pfm"))
}

/// Reads `.pfm` files as PFM and anything else as raw float32 depth.
pub fn read_depth(path: &Path) -> Result<DepthMap> {
    let bytes = read_bytes(path)?;
    let decoded = if is_pfm(path) {
        decode_pfm(&bytes)
    } else {
        decode_raw_depth(&bytes)
    };
    decoded.map_err(|m| Error::format(path, m))
}

pub fn write_depth(path: &Path, depth: &DepthMap) -> Result<()> {
    let bytes = if is_pfm(path) {
        encode_pfm(depth)
    } else {
        encode_raw_depth(depth)
    };
    write_bytes(path, &bytes)
}
