use std::ops::Range;

use super::{LatentMask, MaskMode};
use crate::geometry::BinaryMask;
use crate::{Error, Result};

/// Raw frames per latent frame after the first.
pub const TEMPORAL_COMPRESSION: usize = 4;

/// `floor((frames - 1) / factor) + 1`; 49 raw frames give 13 latent frames.
pub fn latent_frame_count(raw_frames: usize, factor: usize) -> usize {
    if raw_frames == 0 {
        return 0;
    }
    (raw_frames - 1) / factor + 1
}

/// Raw-frame window of every latent frame: the first frame alone, then
/// consecutive runs of `factor` frames. Trailing frames that do not fill a
/// run are not covered, matching [`latent_frame_count`].
pub fn temporal_windows(raw_frames: usize, factor: usize) -> Vec<Range<usize>> {
    (0..latent_frame_count(raw_frames, factor))
        .map(|t| {
            if t == 0 {
                0..1
            } else {
                1 + factor * (t - 1)..1 + factor * t
            }
        })
        .collect()
}

fn cell_bounds(raw: usize, cells: usize) -> Vec<Range<usize>> {
    (0..cells).map(|i| i * raw / cells..(i + 1) * raw / cells).collect()
}

/// Pools full-resolution visibility masks onto a `(frames, height, width)`
/// latent grid.
///
/// Spatial cells split the frame with integer boundaries `i * H / h`, so a
/// non-divisible size leaves the remainder spread over the cells. Latent
/// frames cover [`temporal_windows`] with the given compression factor.
/// Train mode averages every raw pixel in the space-time cell; inference
/// mode takes the maximum.
pub fn downsample_mask(
    raw: &[BinaryMask],
    target: (usize, usize, usize),
    mode: MaskMode,
    temporal_factor: usize,
) -> Result<LatentMask> {
    let (lf, lh, lw) = target;
    let first = raw
        .first()
        .ok_or_else(|| Error::InvalidParameter("no masks to downsample".into()))?;
    if temporal_factor == 0 {
        return Err(Error::InvalidParameter(
            "temporal compression factor must be >= 1".into(),
        ));
    }
    let (w, h) = (first.width(), first.height());
    if let Some(i) = raw.iter().position(|m| m.width() != w || m.height() != h) {
        return Err(Error::Shape(format!("mask {i} does not match {w}x{h}")));
    }
    if lf == 0 || lh == 0 || lw == 0 || lf > raw.len() || lh > h || lw > w {
        return Err(Error::Shape(format!(
            "target {lf}x{lh}x{lw} exceeds raw masks {}x{h}x{w}",
            raw.len()
        )));
    }
    let windows = temporal_windows(raw.len(), temporal_factor);
    if windows.len() != lf {
        return Err(Error::Shape(format!(
            "{} raw frames compress to {} latent frames, target asks for {lf}",
            raw.len(),
            windows.len()
        )));
    }
    let rows = cell_bounds(h, lh);
    let cols = cell_bounds(w, lw);

    // Per-frame set-pixel counts for every spatial cell.
    let cell_counts = |m: &BinaryMask| -> Vec<u32> {
        let mut counts = vec![0u32; lh * lw];
        let px = m.as_slice();
        for (cy, ry) in rows.iter().enumerate() {
            for y in ry.clone() {
                let row = &px[y * w..(y + 1) * w];
                for (cx, rx) in cols.iter().enumerate() {
                    counts[cy * lw + cx] += row[rx.clone()].iter().filter(|b| **b).count() as u32;
                }
            }
        }
        counts
    };

    let mut values = Vec::with_capacity(lf * lh * lw);
    for window in &windows {
        let mut total = vec![0u64; lh * lw];
        for m in &raw[window.clone()] {
            for (t, c) in total.iter_mut().zip(cell_counts(m)) {
                *t += c as u64;
            }
        }
        for (cy, ry) in rows.iter().enumerate() {
            for (cx, rx) in cols.iter().enumerate() {
                let set = total[cy * lw + cx];
                let value = match mode {
                    MaskMode::Train => {
                        let n = (window.len() * ry.len() * rx.len()) as f64;
                        (set as f64 / n) as f32
                    }
                    MaskMode::Inference => {
                        if set > 0 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                values.push(value);
            }
        }
    }
    LatentMask::new(lf, lh, lw, values, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_frame_counts() {
        assert_eq!(latent_frame_count(49, 4), 13);
        assert_eq!(temporal_windows(49, 4).len(), 13);
        assert_eq!(temporal_windows(49, 4)[12], 45..49);
        assert_eq!(temporal_windows(6, 4), vec![0..1, 1..5]);
        assert_eq!(temporal_windows(2, 4), vec![0..1]);
        assert_eq!(latent_frame_count(1, 4), 1);
    }

    #[test]
    fn constant_mask_pools_to_ones() {
        let raw = vec![BinaryMask::filled(8, 6, true); 5];
        for mode in [MaskMode::Train, MaskMode::Inference] {
            let m = downsample_mask(&raw, (2, 3, 4), mode, 4).unwrap();
            assert!(m.values().iter().all(|v| *v == 1.0));
        }
    }

    #[test]
    fn two_by_two_cell_half_set() {
        let raw = vec![BinaryMask::new(2, 2, vec![true, true, false, false]).unwrap()];
        assert_eq!(
            downsample_mask(&raw, (1, 1, 1), MaskMode::Train, 4).unwrap().values(),
            &[0.5]
        );
        assert_eq!(
            downsample_mask(&raw, (1, 1, 1), MaskMode::Inference, 4)
                .unwrap()
                .values(),
            &[1.0]
        );
    }

    #[test]
    fn oversized_target_rejected() {
        let raw = vec![BinaryMask::filled(4, 4, true); 5];
        assert!(downsample_mask(&raw, (2, 5, 4), MaskMode::Train, 4).is_err());
        assert!(downsample_mask(&raw, (3, 2, 2), MaskMode::Train, 4).is_err());
        assert!(downsample_mask(&[], (1, 1, 1), MaskMode::Train, 4).is_err());
    }

    #[test]
    fn ragged_cells_cover_every_pixel() {
        // 5 columns into 2 cells: [0, 2) and [2, 5).
        let raw = vec![BinaryMask::from_fn(5, 1, |x, _| x == 4)];
        let m = downsample_mask(&raw, (1, 1, 2), MaskMode::Train, 4).unwrap();
        assert_eq!(m.values(), &[0.0, (1.0f64 / 3.0) as f32]);
    }
}
