use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};

use super::{read_bytes, write_bytes};
use crate::flow::FlowField;
use crate::{Error, Result};

/// Middlebury sanity tag, the float whose bytes spell "PIEH".
pub const FLO_MAGIC: f32 = 202021.25;

const MAX_DIM: i32 = 1 << 16;

/// Decodes a `.flo` payload into `(width, height, u, v)`.
pub fn decode_flo(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<f32>, Vec<f32>), String> {
    if bytes.len() < 12 {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    let magic = LittleEndian::read_f32(&bytes[0..4]);
    if magic != FLO_MAGIC {
        return Err(format!("bad magic {magic}, expected {FLO_MAGIC}"));
    }
    let w = LittleEndian::read_i32(&bytes[4..8]);
    let h = LittleEndian::read_i32(&bytes[8..12]);
    if !(1..=MAX_DIM).contains(&w) || !(1..=MAX_DIM).contains(&h) {
        return Err(format!("implausible dimensions {w}x{h}"));
    }
    let (w, h) = (w as usize, h as usize);
    let expected = 12 + w * h * 8;
    if bytes.len() != expected {
        return Err(format!(
            "payload is {} bytes, expected {expected} for {w}x{h}",
            bytes.len()
        ));
    }
    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    for px in bytes[12..].chunks_exact(8) {
        u.push(LittleEndian::read_f32(&px[0..4]));
        v.push(LittleEndian::read_f32(&px[4..8]));
    }
    Ok((w, h, u, v))
}

pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let n = flow.width() * flow.height();
    let mut out = vec![0u8; 12 + n * 8];
    LittleEndian::write_f32(&mut out[0..4], FLO_MAGIC);
    LittleEndian::write_i32(&mut out[4..8], flow.width() as i32);
    LittleEndian::write_i32(&mut out[8..12], flow.height() as i32);
    for (i, px) in out[12..].chunks_exact_mut(8).enumerate() {
        LittleEndian::write_f32(&mut px[0..4], flow.u()[i]);
        LittleEndian::write_f32(&mut px[4..8], flow.v()[i]);
    }
    out
}

/// Reads a `.flo` file as the flow from `source_frame` to `target_frame`.
pub fn read_flo(path: &Path, source_frame: usize, target_frame: usize) -> Result<FlowField> {
    let bytes = read_bytes(path)?;
    let (w, h, u, v) = decode_flo(&bytes).map_err(|m| Error::format(path, m))?;
    FlowField::new(w, h, u, v, source_frame, target_frame).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_flo(path: &Path, flow: &FlowField) -> Result<()> {
    write_bytes(path, &encode_flo(flow))
}
