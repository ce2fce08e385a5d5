use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};

use super::{read_bytes, write_bytes};
use crate::latent::{LatentGrid, LatentMask, MaskMode};
use crate::{Error, Result};

pub const LATENT_MAGIC: &[u8; 4] = b"EPLG";

const HEADER: usize = 4 + 4 * 4;

fn encode_header(out: &mut Vec<u8>, dims: [usize; 4]) {
    out.extend_from_slice(LATENT_MAGIC);
    for d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
}

fn decode_header(bytes: &[u8]) -> std::result::Result<[usize; 4], String> {
    if bytes.len() < HEADER {
        return Err(format!("truncated latent header ({} bytes)", bytes.len()));
    }
    if &bytes[0..4] != LATENT_MAGIC {
        return Err("bad latent magic, expected \"EPLG\"".into());
    }
    let mut dims = [0usize; 4];
    for (i, d) in dims.iter_mut().enumerate() {
        *d = LittleEndian::read_u32(&bytes[4 + i * 4..8 + i * 4]) as usize;
    }
    Ok(dims)
}

fn decode_payload(bytes: &[u8], n: usize) -> std::result::Result<Vec<f32>, String> {
    if bytes.len() != n * 4 {
        return Err(format!("latent payload is {} bytes, expected {}", bytes.len(), n * 4));
    }
    Ok(bytes.chunks_exact(4).map(LittleEndian::read_f32).collect())
}

/// `"EPLG"`, `u32` frames, channels, height, width, then little-endian
/// `f32` payload.
pub fn encode_latent_grid(grid: &LatentGrid) -> Vec<u8> {
    let (t, c, h, w) = grid.shape();
    let mut out = Vec::with_capacity(HEADER + grid.data().len() * 4);
    encode_header(&mut out, [t, c, h, w]);
    for v in grid.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_latent_grid(bytes: &[u8]) -> std::result::Result<LatentGrid, String> {
    let [t, c, h, w] = decode_header(bytes)?;
    let data = decode_payload(&bytes[HEADER..], t * c * h * w)?;
    LatentGrid::new(t, c, h, w, data).map_err(|e| e.to_string())
}

/// Same header with one channel, then a mode byte (0 = train,
/// 1 = inference), then the payload.
pub fn encode_latent_mask(mask: &LatentMask) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 1 + mask.values().len() * 4);
    encode_header(&mut out, [mask.frames(), 1, mask.height(), mask.width()]);
    out.push(match mask.mode() {
        MaskMode::Train => 0,
        MaskMode::Inference => 1,
    });
    for v in mask.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_latent_mask(bytes: &[u8]) -> std::result::Result<LatentMask, String> {
    let [t, c, h, w] = decode_header(bytes)?;
    if c != 1 {
        return Err(format!("latent mask must have 1 channel, found {c}"));
    }
    let mode = match bytes.get(HEADER) {
        Some(0) => MaskMode::Train,
        Some(1) => MaskMode::Inference,
        Some(b) => return Err(format!("unknown mask mode byte {b}")),
        None => return Err("missing mask mode byte".into()),
    };
    let values = decode_payload(&bytes[HEADER + 1..], t * h * w)?;
    LatentMask::new(t, h, w, values, mode).map_err(|e| e.to_string())
}

pub fn read_latent_grid(path: &Path) -> Result<LatentGrid> {
    decode_latent_grid(&read_bytes(path)?).map_err(|m| Error::format(path, m))
}

pub fn write_latent_grid(path: &Path, grid: &LatentGrid) -> Result<()> {
    write_bytes(path, &encode_latent_grid(grid))
}

pub fn read_latent_mask(path: &Path) -> Result<LatentMask> {
    decode_latent_mask(&read_bytes(path)?).map_err(|m| Error::format(path, m))
}

pub fn write_latent_mask(path: &Path, mask: &LatentMask) -> Result<()> {
    write_bytes(path, &encode_latent_mask(mask))
}
