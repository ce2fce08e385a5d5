use super::{valid_at, FlowField};
use crate::geometry::BinaryMask;
use crate::{Error, Result};

/// Per-frame map of pixels traceable to the first frame.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityMask {
    pub mask: BinaryMask,
    pub frame_index: usize,
    /// Set when this mask is a copy made by [`freeze_masks`].
    pub frozen: bool,
}

impl VisibilityMask {
    pub fn full(width: usize, height: usize, frame_index: usize) -> Self {
        Self {
            mask: BinaryMask::filled(width, height, true),
            frame_index,
            frozen: false,
        }
    }

    pub fn fraction(&self) -> f64 {
        self.mask.fraction()
    }
}

/// Forward/backward consistency test for frame `k`.
///
/// `forward` maps frame 0 to frame `k`; `backward` maps frame `k` to frame
/// 0. Pixel `q` of frame `k` is visible iff `p = q + B(q)` lands in frame 0
/// and `|F(p) + B(q)| <= consistency_tol`, with `F` sampled bilinearly.
pub fn visibility_mask(forward: &FlowField, backward: &FlowField, consistency_tol: f64) -> Result<VisibilityMask> {
    visibility_mask_with_validity(forward, None, backward, None, consistency_tol)
}

/// As [`visibility_mask`], additionally rejecting pixels whose backward flow
/// or sampled forward flow is marked invalid (e.g. after chain composition).
pub fn visibility_mask_with_validity(
    forward: &FlowField,
    forward_valid: Option<&BinaryMask>,
    backward: &FlowField,
    backward_valid: Option<&BinaryMask>,
    consistency_tol: f64,
) -> Result<VisibilityMask> {
    if !(consistency_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "consistency tolerance must be positive, got {consistency_tol}"
        )));
    }
    let (w, h) = (backward.width(), backward.height());
    if forward.width() != w || forward.height() != h {
        return Err(Error::Shape(format!(
            "forward flow {}x{} vs backward flow {w}x{h}",
            forward.width(),
            forward.height()
        )));
    }
    for m in [forward_valid, backward_valid].into_iter().flatten() {
        if m.width() != w || m.height() != h {
            return Err(Error::Shape("flow validity grid does not match flow size".into()));
        }
    }
    let tol2 = consistency_tol * consistency_tol;
    let mask = BinaryMask::from_fn(w, h, |x, y| {
        if backward_valid.is_some_and(|m| !m.get(x, y)) {
            return false;
        }
        let (bu, bv) = backward.at(x, y);
        let (px, py) = (x as f64 + bu as f64, y as f64 + bv as f64);
        if !forward.in_frame(px, py) {
            return false;
        }
        if forward_valid.is_some_and(|m| !valid_at(m, px, py)) {
            return false;
        }
        let (fu, fv) = forward.sample(px, py);
        let (ex, ey) = (fu as f64 + bu as f64, fv as f64 + bv as f64);
        ex * ex + ey * ey <= tol2
    });
    Ok(VisibilityMask {
        mask,
        frame_index: backward.source_frame,
        frozen: false,
    })
}

/// Stops masks from shrinking once they collapse.
///
/// Scanning forward from frame 1, the first frame whose visible fraction
/// drops below `min_visible_fraction` and every later frame receive a copy
/// of the preceding mask, flagged `frozen`. Frame 0 is never modified.
pub fn freeze_masks(masks: Vec<VisibilityMask>, min_visible_fraction: f64) -> Result<Vec<VisibilityMask>> {
    if !(min_visible_fraction > 0.0 && min_visible_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "min visible fraction must lie in (0, 1), got {min_visible_fraction}"
        )));
    }
    let Some(trigger) = (1..masks.len()).find(|&k| masks[k].fraction() < min_visible_fraction) else {
        return Ok(masks);
    };
    let healthy = masks[trigger - 1].mask.clone();
    let mut out = masks;
    for m in &mut out[trigger..] {
        m.mask = healthy.clone();
        m.frozen = true;
    }
    Ok(out)
}
