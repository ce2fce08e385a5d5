use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{read_bytes, read_frame, read_mask, sequence_len, sequence_path, write_bytes, write_frame, write_mask};
use crate::flow::{AnchorMetadata, AnchorVideo, VisibilityMask};
use crate::{Error, Result};

pub const ANCHOR_INDEX: &str = "anchor.json";

#[derive(Serialize, Deserialize)]
struct AnchorIndex {
    frames: usize,
    frozen: Vec<bool>,
    metadata: AnchorMetadata,
}

/// Writes `anchor_#####.png`, `mask_#####.png` and `anchor.json` (frame
/// count, freeze flags, metadata) into `dir`.
pub fn write_anchor(dir: &Path, anchor: &AnchorVideo) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    anchor
        .frames
        .par_iter()
        .zip(&anchor.masks)
        .enumerate()
        .try_for_each(|(i, (f, m))| {
            write_frame(&sequence_path(dir, "anchor", i, "png"), f)?;
            write_mask(&sequence_path(dir, "mask", i, "png"), &m.mask)
        })?;
    let index = AnchorIndex {
        frames: anchor.len(),
        frozen: anchor.masks.iter().map(|m| m.frozen).collect(),
        metadata: anchor.metadata.clone(),
    };
    let text = serde_json::to_string_pretty(&index).expect("index serializes");
    write_bytes(&dir.join(ANCHOR_INDEX), text.as_bytes())
}

/// Reads a directory written by [`write_anchor`]. Without `anchor.json`
/// the frame count comes from the file run and nothing is marked frozen.
pub fn read_anchor(dir: &Path) -> Result<AnchorVideo> {
    let index_path = dir.join(ANCHOR_INDEX);
    let index: Option<AnchorIndex> = if index_path.is_file() {
        let bytes = read_bytes(&index_path)?;
        Some(serde_json::from_slice(&bytes).map_err(|e| Error::format(&index_path, e.to_string()))?)
    } else {
        None
    };
    let n = index
        .as_ref()
        .map_or_else(|| sequence_len(dir, "anchor", "png"), |i| i.frames);
    if n == 0 {
        return Err(Error::Missing(format!("no anchor frames in {}", dir.display())));
    }
    let pairs: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let frame = read_frame(&sequence_path(dir, "anchor", i, "png"))?;
            let mask = read_mask(&sequence_path(dir, "mask", i, "png"))?;
            Ok((frame, mask))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<_>>()?;
    let frozen = index.as_ref().map(|i| i.frozen.clone()).unwrap_or_default();
    let (frames, masks) = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (f, m))| {
            (
                f,
                VisibilityMask {
                    mask: m,
                    frame_index: i,
                    frozen: frozen.get(i).copied().unwrap_or(false),
                },
            )
        })
        .unzip();
    let metadata = index.map_or_else(
        || AnchorMetadata::new("unknown", serde_json::Value::Null),
        |i| i.metadata,
    );
    Ok(AnchorVideo {
        frames,
        masks,
        metadata,
    })
}
