use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compose_pair, freeze_masks, visibility_mask_with_validity, ComposedFlow, FlowField, VisibilityMask};
use crate::geometry::{BinaryMask, RgbFrame};
use crate::{Error, Result};

/// How an anchor was produced; echoed into `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorMetadata {
    /// Producing operation, e.g. `"masked-source"` or `"render"`.
    pub source: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
}

impl AnchorMetadata {
    pub fn new(source: &str, params: serde_json::Value) -> Self {
        Self {
            source: source.to_string(),
            params,
            seed: None,
        }
    }
}

/// Frames plus per-frame visibility. Invisible pixels are exactly black.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorVideo {
    pub frames: Vec<RgbFrame>,
    pub masks: Vec<VisibilityMask>,
    pub metadata: AnchorMetadata,
}

impl AnchorVideo {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Knobs for [`build_masked_anchor`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnchorParams {
    /// Forward/backward round-trip tolerance in pixels.
    pub consistency_tol: f64,
    /// Visible fraction below which masks freeze.
    pub min_visible_fraction: f64,
}

impl Default for AnchorParams {
    fn default() -> Self {
        Self {
            consistency_tol: 1.0,
            min_visible_fraction: 0.2,
        }
    }
}

/// Flows between frame 0 and frame `k`, with optional validity grids
/// (produced when the flows were composed from chains).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPair {
    /// Frame 0 to frame `k`.
    pub forward: FlowField,
    pub forward_valid: Option<BinaryMask>,
    /// Frame `k` to frame 0.
    pub backward: FlowField,
    pub backward_valid: Option<BinaryMask>,
}

impl FlowPair {
    pub fn direct(forward: FlowField, backward: FlowField) -> Self {
        Self {
            forward,
            forward_valid: None,
            backward,
            backward_valid: None,
        }
    }

    fn frame(&self) -> usize {
        self.forward.target_frame
    }
}

/// Builds first-to-k flow pairs from consecutive-frame flows.
///
/// `next[k]` maps frame `k` to `k + 1`; `prev[k]` maps frame `k + 1` to `k`.
/// Both compositions are incremental: `F(0→k+1) = F(0→k) then next[k]` and
/// `B(k+1→0) = prev[k] then B(k→0)`.
pub fn chain_flow_pairs(next: &[FlowField], prev: &[FlowField]) -> Result<Vec<FlowPair>> {
    if next.len() != prev.len() {
        return Err(Error::Shape(format!(
            "{} forward links but {} backward links",
            next.len(),
            prev.len()
        )));
    }
    let mut pairs = Vec::with_capacity(next.len());
    let mut forward: Option<ComposedFlow> = None;
    let mut backward: Option<ComposedFlow> = None;
    for (k, (n, p)) in next.iter().zip(prev).enumerate() {
        if (n.source_frame, n.target_frame) != (k, k + 1) || (p.source_frame, p.target_frame) != (k + 1, k) {
            return Err(Error::BrokenChain {
                index: k,
                next: k + 1,
                target: n.target_frame,
                source_frame: p.source_frame,
            });
        }
        let f = match &forward {
            None => ComposedFlow::link(n.clone()),
            Some(acc) => compose_pair(acc, n, None)?,
        };
        let link = ComposedFlow::link(p.clone());
        let b = match &backward {
            None => link,
            Some(acc) => compose_pair(&link, &acc.flow, Some(&acc.valid))?,
        };
        pairs.push(FlowPair {
            forward: f.flow.clone(),
            forward_valid: Some(f.valid.clone()),
            backward: b.flow.clone(),
            backward_valid: Some(b.valid.clone()),
        });
        forward = Some(f);
        backward = Some(b);
    }
    Ok(pairs)
}

fn apply_mask(frame: &RgbFrame, mask: &BinaryMask) -> RgbFrame {
    let mut out = frame.clone();
    for (x, y, px) in out.enumerate_pixels_mut() {
        if !mask.get(x as usize, y as usize) {
            px.0 = [0, 0, 0];
        }
    }
    out
}

/// Masks a source video by first-frame visibility.
///
/// `flows[k - 1]` must connect frame 0 and frame `k` for every `k` in
/// `1..video.len()`. Frame 0 keeps an all-ones mask; later masks come from
/// the consistency test, then [`freeze_masks`]; invisible pixels are set to
/// black.
pub fn build_masked_anchor(video: &[RgbFrame], flows: &[FlowPair], params: &AnchorParams) -> Result<AnchorVideo> {
    let first = video
        .first()
        .ok_or_else(|| Error::InvalidParameter("source video has no frames".into()))?;
    let (w, h) = first.dimensions();
    if let Some(i) = video.iter().position(|f| f.dimensions() != (w, h)) {
        return Err(Error::Shape(format!("frame {i} is not {w}x{h}")));
    }
    for k in 1..video.len() {
        let Some(pair) = flows.get(k - 1) else {
            return Err(Error::Missing(format!("flow for frame {k}")));
        };
        if pair.frame() != k
            || pair.forward.source_frame != 0
            || (pair.backward.source_frame, pair.backward.target_frame) != (k, 0)
        {
            return Err(Error::Missing(format!(
                "flow pair {} does not connect frames 0 and {k}",
                k - 1
            )));
        }
        if pair.forward.width() != w as usize || pair.forward.height() != h as usize {
            return Err(Error::Shape(format!(
                "flow for frame {k} is {}x{}, video is {w}x{h}",
                pair.forward.width(),
                pair.forward.height()
            )));
        }
    }

    let mut masks = vec![VisibilityMask::full(w as usize, h as usize, 0)];
    let rest: Vec<VisibilityMask> = flows[..video.len() - 1]
        .par_iter()
        .map(|p| {
            visibility_mask_with_validity(
                &p.forward,
                p.forward_valid.as_ref(),
                &p.backward,
                p.backward_valid.as_ref(),
                params.consistency_tol,
            )
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<_>>()?;
    masks.extend(rest);
    let masks = freeze_masks(masks, params.min_visible_fraction)?;

    let frames = video
        .par_iter()
        .zip(&masks)
        .map(|(f, m)| apply_mask(f, &m.mask))
        .collect();
    Ok(AnchorVideo {
        frames,
        masks,
        metadata: AnchorMetadata::new("masked-source", serde_json::to_value(params).expect("params serialize")),
    })
}

/// Still-image anchor for regional animation: every frame is the image with
/// `region` blacked out, so only the complement constrains generation.
pub fn static_regional_anchor(image: &RgbFrame, region: &BinaryMask, n_frames: usize) -> Result<AnchorVideo> {
    if n_frames == 0 {
        return Err(Error::InvalidParameter("n_frames must be >= 1".into()));
    }
    if (region.width() as u32, region.height() as u32) != image.dimensions() {
        return Err(Error::Shape("region mask does not match image size".into()));
    }
    let visible = region.complement();
    if visible.is_empty() {
        return Err(Error::InvalidParameter(
            "region covers the whole frame; nothing stays visible".into(),
        ));
    }
    let frame = apply_mask(image, &visible);
    Ok(AnchorVideo {
        frames: vec![frame; n_frames],
        masks: (0..n_frames)
            .map(|i| VisibilityMask {
                mask: visible.clone(),
                frame_index: i,
                frozen: false,
            })
            .collect(),
        metadata: AnchorMetadata::new("regional", serde_json::json!({ "n_frames": n_frames })),
    })
}

/// Mean over flows of the mean per-pixel displacement magnitude, in pixels.
pub fn flow_motion_score(flows: &[FlowField]) -> Result<f64> {
    if flows.is_empty() {
        return Err(Error::InvalidParameter("no flows to score".into()));
    }
    let total: f64 = flows
        .iter()
        .map(|f| {
            let sum: f64 = f.u().iter().zip(f.v()).map(|(u, v)| (*u as f64).hypot(*v as f64)).sum();
            sum / (f.width() * f.height()) as f64
        })
        .sum();
    Ok(total / flows.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn video(n: usize, w: u32, h: u32) -> Vec<RgbFrame> {
        (0..n)
            .map(|k| RgbFrame::from_fn(w, h, |x, y| Rgb([(x * 7 + k as u32) as u8, (y * 11) as u8, 200])))
            .collect()
    }

    #[test]
    fn static_video_unchanged() {
        let v = video(4, 12, 8);
        let flows: Vec<_> = (1..4)
            .map(|k| FlowPair::direct(FlowField::zeros(12, 8, 0, k), FlowField::zeros(12, 8, k, 0)))
            .collect();
        let a = build_masked_anchor(&v, &flows, &AnchorParams::default()).unwrap();
        assert_eq!(a.frames, v);
        assert!(a.masks.iter().all(|m| m.mask.is_full() && !m.frozen));
    }

    #[test]
    fn pan_blacks_out_new_strip() {
        let v = video(3, 20, 4);
        let flows: Vec<_> = (1..3)
            .map(|k| {
                let s = 2.0 * k as f32;
                FlowPair::direct(
                    FlowField::uniform(20, 4, -s, 0.0, 0, k),
                    FlowField::uniform(20, 4, s, 0.0, k, 0),
                )
            })
            .collect();
        let a = build_masked_anchor(&v, &flows, &AnchorParams::default()).unwrap();
        for (k, f) in a.frames.iter().enumerate() {
            for (x, y, px) in f.enumerate_pixels() {
                if (x as usize) < 20 - 2 * k {
                    assert_eq!(px, v[k].get_pixel(x, y));
                } else {
                    assert_eq!(px.0, [0, 0, 0]);
                }
            }
        }
    }

    #[test]
    fn missing_flow_rejected() {
        let v = video(3, 6, 4);
        let flows = vec![FlowPair::direct(
            FlowField::zeros(6, 4, 0, 1),
            FlowField::zeros(6, 4, 1, 0),
        )];
        let err = build_masked_anchor(&v, &flows, &AnchorParams::default()).unwrap_err();
        assert!(err.to_string().contains("frame 2"), "{err}");
    }

    #[test]
    fn chained_pairs_match_direct_uniform() {
        let next: Vec<_> = (0..3).map(|k| FlowField::uniform(16, 4, -1.0, 0.0, k, k + 1)).collect();
        let prev: Vec<_> = (0..3).map(|k| FlowField::uniform(16, 4, 1.0, 0.0, k + 1, k)).collect();
        let pairs = chain_flow_pairs(&next, &prev).unwrap();
        for (i, p) in pairs.iter().enumerate() {
            let k = (i + 1) as f32;
            assert!(p.forward.u().iter().all(|u| *u == -k));
            assert!(p.backward.u().iter().all(|u| *u == k));
            assert_eq!((p.backward.source_frame, p.backward.target_frame), (i + 1, 0));
        }
        let v = video(4, 16, 4);
        let a = build_masked_anchor(&v, &pairs, &AnchorParams::default()).unwrap();
        for (k, m) in a.masks.iter().enumerate() {
            for x in 0..16 {
                assert_eq!(m.mask.get(x, 2), x < 16 - k);
            }
        }
    }

    #[test]
    fn regional_anchor_masks_region() {
        let img = video(1, 8, 4).remove(0);
        let none = BinaryMask::filled(8, 4, false);
        let a = static_regional_anchor(&img, &none, 3).unwrap();
        assert!(a.frames.iter().all(|f| *f == img));
        assert!(a.masks.iter().all(|m| m.mask.is_full()));

        let left = BinaryMask::from_fn(8, 4, |x, _| x < 4);
        let a = static_regional_anchor(&img, &left, 2).unwrap();
        for f in &a.frames {
            for (x, y, px) in f.enumerate_pixels() {
                if x < 4 {
                    assert_eq!(px.0, [0, 0, 0]);
                    assert!(!a.masks[0].mask.get(x as usize, y as usize));
                } else {
                    assert_eq!(px, img.get_pixel(x, y));
                }
            }
        }
        assert!(static_regional_anchor(&img, &BinaryMask::filled(8, 4, true), 2).is_err());
        assert!(static_regional_anchor(&img, &none, 0).is_err());
    }

    #[test]
    fn motion_scores() {
        assert_eq!(flow_motion_score(&[FlowField::zeros(3, 3, 0, 1)]).unwrap(), 0.0);
        assert_eq!(
            flow_motion_score(&[FlowField::uniform(3, 3, 3.0, 4.0, 0, 1)]).unwrap(),
            5.0
        );
        let two = [
            FlowField::uniform(2, 2, 2.0, 0.0, 0, 1),
            FlowField::uniform(2, 2, 0.0, -4.0, 1, 2),
        ];
        assert_eq!(flow_motion_score(&two).unwrap(), 3.0);
        assert!(flow_motion_score(&[]).is_err());
    }
}
