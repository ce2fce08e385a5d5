//! On-disk formats: Middlebury `.flo`, PFM / raw depth, PNG frames and
//! masks, anchor directories, trajectory JSON and the binary latent-grid
//! container.

mod anchor;
mod depth;
mod flo;
mod latent;
mod png;
mod trajectory;

use std::path::{Path, PathBuf};

pub use anchor::{read_anchor, write_anchor, ANCHOR_INDEX};
pub use depth::{decode_pfm, decode_raw_depth, encode_pfm, encode_raw_depth, read_depth, write_depth};
pub use flo::{decode_flo, encode_flo, read_flo, write_flo, FLO_MAGIC};
pub use latent::{
    decode_latent_grid, decode_latent_mask, encode_latent_grid, encode_latent_mask, read_latent_grid, read_latent_mask,
    write_latent_grid, write_latent_mask, LATENT_MAGIC,
};
pub use png::{read_frame, read_mask, write_frame, write_mask};
pub use trajectory::{parse_trajectory, read_trajectory, trajectory_to_json, write_trajectory};

use crate::{Error, Result};

/// `dir/<prefix>_<index:05>.<ext>`
pub fn sequence_path(dir: &Path, prefix: &str, index: usize, ext: &str) -> PathBuf {
    dir.join(format!("{prefix}_{index:05}.{ext}"))
}

/// Length of the run of consecutive files `prefix_00000.ext`, `prefix_00001.ext`, ...
pub fn sequence_len(dir: &Path, prefix: &str, ext: &str) -> usize {
    (0..)
        .take_while(|&i| sequence_path(dir, prefix, i, ext).is_file())
        .count()
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
