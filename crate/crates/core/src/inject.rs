//! Flying-pixel artifact injection for training anchors.
//!
//! A single direction is drawn per video and `ray_count` straight, dashed,
//! fading rays are laid perpendicular to it. Each ray takes the first-frame
//! color at its anchor pixel and keeps it in every frame. Only pixels whose
//! visibility mask is set are touched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::flow::AnchorVideo;
use crate::geometry::RgbFrame;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RaySpec {
    /// Radians. `None` draws uniformly from [0, pi).
    pub direction_angle: Option<f64>,
    /// `None` draws uniformly from 3..=8.
    pub ray_count: Option<u32>,
    pub dash_on: u32,
    pub dash_off: u32,
    pub width: u32,
    pub fade_start: f64,
    pub fade_end: f64,
    /// Ray length in pixels; `None` runs each ray to the frame border.
    pub length: Option<u32>,
    pub seed: u64,
}

impl Default for RaySpec {
    fn default() -> Self {
        Self {
            direction_angle: None,
            ray_count: None,
            dash_on: 6,
            dash_off: 4,
            width: 1,
            fade_start: 1.0,
            fade_end: 0.3,
            length: None,
            seed: 0,
        }
    }
}

impl RaySpec {
    pub fn validate(&self) -> Result<()> {
        if self.dash_on < 1 || self.dash_off < 1 {
            return Err(Error::InvalidParameter(
                "dash_on and dash_off must be at least 1".into(),
            ));
        }
        if self.width < 1 {
            return Err(Error::InvalidParameter("ray width must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.fade_end)
            || !(0.0..=1.0).contains(&self.fade_start)
            || self.fade_end > self.fade_start
        {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= fade_end <= fade_start <= 1, got {} -> {}",
                self.fade_start, self.fade_end
            )));
        }
        if let Some(a) = self.direction_angle {
            if !a.is_finite() {
                return Err(Error::InvalidParameter("direction_angle must be finite".into()));
            }
        }
        Ok(())
    }
}

/// One planned ray in pixel space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    /// Anchor pixel (column, row).
    pub anchor: (usize, usize),
    /// Unit step direction.
    pub direction: [f64; 2],
    pub color: [u8; 3],
}

/// The rays drawn into a video, after all random draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayPlan {
    pub direction_angle: f64,
    pub rays: Vec<Ray>,
}

/// Draws direction, count, anchors and colors for `anchor`.
///
/// Anchors are drawn among first-frame visible pixels, falling back to any
/// pixel when frame 0 has none.
pub fn plan_rays(anchor: &AnchorVideo, spec: &RaySpec) -> Result<RayPlan> {
    spec.validate()?;
    let first = anchor
        .frames
        .first()
        .ok_or_else(|| Error::InvalidParameter("anchor has no frames".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let angle = match spec.direction_angle {
        Some(a) => a,
        None => rng.random_range(0.0..std::f64::consts::PI),
    };
    let count = match spec.ray_count {
        Some(n) => n,
        None => rng.random_range(3..=8),
    };
    let perp = angle + std::f64::consts::FRAC_PI_2;
    let direction = [perp.cos(), perp.sin()];
    let (w, h) = (first.width() as usize, first.height() as usize);
    let candidates: Vec<usize> = match anchor.masks.first() {
        Some(m) if !m.mask.is_empty() => (0..w * h).filter(|&i| m.mask.as_slice()[i]).collect(),
        _ => (0..w * h).collect(),
    };
    let rays = (0..count)
        .map(|_| {
            let i = candidates[rng.random_range(0..candidates.len())];
            let (x, y) = (i % w, i / w);
            Ray {
                anchor: (x, y),
                direction,
                color: first.get_pixel(x as u32, y as u32).0,
            }
        })
        .collect();
    Ok(RayPlan {
        direction_angle: angle,
        rays,
    })
}

/// Pixels covered by the "on" dashes of `ray`, with their opacity, in
/// drawing order.
///
/// The ray is stepped one pixel at a time along its dominant axis starting
/// at the anchor center; step `s` is on when `s mod (on + off) < on`.
pub fn ray_pixels(ray: &Ray, spec: &RaySpec, width: usize, height: usize) -> Vec<(usize, usize, f64)> {
    let [dx, dy] = ray.direction;
    let major = dx.abs().max(dy.abs());
    let (sx, sy) = (dx / major, dy / major);
    let (cx, cy) = (ray.anchor.0 as f64 + 0.5, ray.anchor.1 as f64 + 0.5);
    let inside = |s: f64| {
        let (x, y) = (cx + s * sx, cy + s * sy);
        x >= 0.0 && y >= 0.0 && x < width as f64 && y < height as f64
    };
    let mut steps = 0usize;
    while spec.length.is_none_or(|l| steps < l as usize) && inside(steps as f64) {
        steps += 1;
    }
    // Thickness is spread across the minor axis.
    let normal = if dx.abs() >= dy.abs() { (0i64, 1i64) } else { (1, 0) };
    let half = (spec.width as i64 - 1) / 2;
    let period = (spec.dash_on + spec.dash_off) as usize;
    let mut out = Vec::new();
    for s in 0..steps {
        if s % period >= spec.dash_on as usize {
            continue;
        }
        let t = if steps > 1 { s as f64 / (steps - 1) as f64 } else { 0.0 };
        let alpha = spec.fade_start + (spec.fade_end - spec.fade_start) * t;
        let (x, y) = ((cx + s as f64 * sx).floor() as i64, (cy + s as f64 * sy).floor() as i64);
        for k in 0..spec.width as i64 {
            let off = k - half;
            let (px, py) = (x + normal.0 * off, y + normal.1 * off);
            if px >= 0 && py >= 0 && (px as usize) < width && (py as usize) < height {
                out.push((px as usize, py as usize, alpha));
            }
        }
    }
    out
}

fn blend(alpha: f64, ray: [u8; 3], base: [u8; 3]) -> [u8; 3] {
    let mix = |c: u8, f: u8| (alpha * c as f64 + (1.0 - alpha) * f as f64).round().clamp(0.0, 255.0) as u8;
    [mix(ray[0], base[0]), mix(ray[1], base[1]), mix(ray[2], base[2])]
}

/// Draws a planned set of rays into every frame of `anchor`.
pub fn draw_rays(anchor: &AnchorVideo, plan: &RayPlan, spec: &RaySpec) -> AnchorVideo {
    let mut out = anchor.clone();
    for (frame, vis) in out.frames.iter_mut().zip(&anchor.masks) {
        draw_into(frame, &vis.mask, plan, spec);
    }
    out
}

fn draw_into(frame: &mut RgbFrame, mask: &crate::geometry::BinaryMask, plan: &RayPlan, spec: &RaySpec) {
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    for ray in &plan.rays {
        for (x, y, alpha) in ray_pixels(ray, spec, w, h) {
            if !mask.get(x, y) {
                continue;
            }
            let p = frame.get_pixel_mut(x as u32, y as u32);
            p.0 = blend(alpha, ray.color, p.0);
        }
    }
}

/// Injects dashed rays into the visible regions of `anchor`.
///
/// Masks are returned unchanged and the resolved plan is recorded in the
/// metadata together with the seed.
pub fn inject_artifacts(anchor: &AnchorVideo, spec: &RaySpec) -> Result<AnchorVideo> {
    let plan = plan_rays(anchor, spec)?;
    let mut out = draw_rays(anchor, &plan, spec);
    out.metadata.seed = Some(spec.seed);
    out.metadata.params = serde_json::json!({
        "base": anchor.metadata.params,
        "base_source": anchor.metadata.source,
        "inject": spec,
        "resolved_direction_angle": plan.direction_angle,
        "resolved_ray_count": plan.rays.len(),
    });
    Ok(out)
}
