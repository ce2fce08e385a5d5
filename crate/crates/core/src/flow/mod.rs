//! Masking-based anchor construction from a source video and dense optical
//! flow: trace every pixel back to the first frame, keep only pixels whose
//! forward/backward correspondence agrees, and stop masks from shrinking
//! once too little remains visible.

mod anchor;
mod visibility;

pub use anchor::{
    build_masked_anchor, chain_flow_pairs, flow_motion_score, static_regional_anchor, AnchorMetadata, AnchorParams,
    AnchorVideo, FlowPair,
};
pub use visibility::{freeze_masks, visibility_mask, visibility_mask_with_validity, VisibilityMask};

use crate::geometry::BinaryMask;
use crate::{Error, Result};

/// Dense per-pixel displacement from `source_frame` to `target_frame`, in
/// pixels. Pixel `(x, y)` of the source moves to `(x + u, y + v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
    pub source_frame: usize,
    pub target_frame: usize,
}

impl FlowField {
    pub fn new(
        width: usize,
        height: usize,
        u: Vec<f32>,
        v: Vec<f32>,
        source_frame: usize,
        target_frame: usize,
    ) -> Result<Self> {
        if width == 0 || height == 0 || u.len() != width * height || v.len() != width * height {
            return Err(Error::Shape(format!(
                "flow components ({}, {}) do not match {width}x{height}",
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(&v).any(|d| !d.is_finite()) {
            return Err(Error::InvalidParameter("flow contains non-finite displacements".into()));
        }
        Ok(Self {
            width,
            height,
            u,
            v,
            source_frame,
            target_frame,
        })
    }

    pub fn uniform(width: usize, height: usize, u: f32, v: f32, source_frame: usize, target_frame: usize) -> Self {
        Self {
            width,
            height,
            u: vec![u; width * height],
            v: vec![v; width * height],
            source_frame,
            target_frame,
        }
    }

    pub fn zeros(width: usize, height: usize, source_frame: usize, target_frame: usize) -> Self {
        Self::uniform(width, height, 0.0, 0.0, source_frame, target_frame)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    pub fn at(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    /// True when the continuous position lies within half a pixel of the
    /// outermost pixel centers, i.e. inside the frame's pixel area.
    pub fn in_frame(&self, x: f64, y: f64) -> bool {
        x >= -0.5 && x <= self.width as f64 - 0.5 && y >= -0.5 && y <= self.height as f64 - 0.5
    }

    /// Bilinear sample at a continuous position (pixel centers at integer
    /// coordinates), clamped to the border.
    pub fn sample(&self, x: f64, y: f64) -> (f32, f32) {
        let ((x0, x1, fx), (y0, y1, fy)) = (lerp_coords(x, self.width), lerp_coords(y, self.height));
        let w = self.width;
        let bil = |c: &[f32]| -> f32 {
            let top = lerp(c[y0 * w + x0] as f64, c[y0 * w + x1] as f64, fx);
            let bottom = lerp(c[y1 * w + x0] as f64, c[y1 * w + x1] as f64, fx);
            lerp(top, bottom, fy) as f32
        };
        (bil(&self.u), bil(&self.v))
    }

    fn same_shape(&self, other: &FlowField) -> bool {
        self.width == other.width && self.height == other.height
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // Exact when a == b.
    a + (b - a) * t
}

/// Neighbor indices and weight for a clamped bilinear lookup along one axis.
#[inline]
fn lerp_coords(p: f64, n: usize) -> (usize, usize, f64) {
    let max = (n - 1) as f64;
    let p = p.clamp(0.0, max);
    let i0 = p.floor();
    let i0u = i0 as usize;
    let i1u = (i0u + 1).min(n - 1);
    (i0u, i1u, p - i0)
}

/// Validity of the pixel nearest to a continuous position (clamped to the
/// grid). Reading the nearest pixel rather than all bilinear neighbors
/// keeps valid regions from eroding by a pixel at every composition.
pub(crate) fn valid_at(valid: &BinaryMask, x: f64, y: f64) -> bool {
    let nearest = |p: f64, n: usize| (p.round().max(0.0) as usize).min(n - 1);
    valid.get(nearest(x, valid.width()), nearest(y, valid.height()))
}

/// A composed flow plus the pixels whose trace stayed inside the frame at
/// every intermediate frame. The final landing is not checked here; that is
/// the visibility test's job.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedFlow {
    pub flow: FlowField,
    pub valid: BinaryMask,
}

impl ComposedFlow {
    /// A single link, valid everywhere.
    pub fn link(flow: FlowField) -> Self {
        let valid = BinaryMask::filled(flow.width, flow.height, true);
        Self { flow, valid }
    }
}

/// Appends `second` to an already-traced flow: every pixel follows
/// `first`, then `second` sampled bilinearly where it landed. A pixel stays
/// valid when `first` was valid there, it landed inside the frame, and
/// `second_valid` (if given) holds at the nearest pixel.
pub fn compose_pair(
    first: &ComposedFlow,
    second: &FlowField,
    second_valid: Option<&BinaryMask>,
) -> Result<ComposedFlow> {
    let a = &first.flow;
    if !a.same_shape(second) {
        return Err(Error::Shape("flows in a chain must share dimensions".into()));
    }
    if a.target_frame != second.source_frame {
        return Err(Error::BrokenChain {
            index: 0,
            next: 1,
            target: a.target_frame,
            source_frame: second.source_frame,
        });
    }
    let n = a.width * a.height;
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for y in 0..a.height {
        for x in 0..a.width {
            let (du, dv) = a.at(x, y);
            let (qx, qy) = (x as f64 + du as f64, y as f64 + dv as f64);
            let (su, sv) = second.sample(qx, qy);
            let (nu, nv) = (du + su, dv + sv);
            let ok = first.valid.get(x, y) && a.in_frame(qx, qy) && second_valid.is_none_or(|m| valid_at(m, qx, qy));
            u.push(nu);
            v.push(nv);
            valid.push(ok);
        }
    }
    Ok(ComposedFlow {
        flow: FlowField::new(a.width, a.height, u, v, a.source_frame, second.target_frame)?,
        valid: BinaryMask::new(a.width, a.height, valid)?,
    })
}

/// Composes a chain of consecutive flows (`target` of each link equals the
/// `source` of the next) into one flow from the first source to the last
/// target. Pixels whose trace leaves the frame at an intermediate frame are
/// invalid.
pub fn compose_flow(chain: &[FlowField]) -> Result<ComposedFlow> {
    let first = chain
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty flow chain".into()))?;
    for (i, pair) in chain.windows(2).enumerate() {
        if !pair[0].same_shape(&pair[1]) {
            return Err(Error::Shape(format!("flow {} and {} differ in size", i, i + 1)));
        }
        if pair[0].target_frame != pair[1].source_frame {
            return Err(Error::BrokenChain {
                index: i,
                next: i + 1,
                target: pair[0].target_frame,
                source_frame: pair[1].source_frame,
            });
        }
    }
    let mut acc = ComposedFlow::link(first.clone());
    for link in &chain[1..] {
        acc = compose_pair(&acc, link, None)?;
    }
    Ok(acc)
}
