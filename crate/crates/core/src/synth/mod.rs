//! Analytic synthetic scenes: textured axis-aligned planes and boxes seen
//! through a pinhole camera, with exact depth, flow and visibility.
//!
//! Every pixel is point-sampled at its center by casting a ray and keeping
//! the nearest hit. Flow between two frames reprojects that hit; a hit is
//! visible in another frame when it projects inside the image and is the
//! nearest hit along the ray through its projection there.
//!
//! Flow files are dense: displacement is written even for occluded points,
//! as an estimator would, and only points that fall behind the target
//! camera get [`UNKNOWN_FLOW`].

mod canned;
mod texture;

use std::path::Path;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use canned::{canned_scene, CannedOptions, CANNED_SCENES};
pub use texture::Texture;

use crate::flow::FlowField;
use crate::geometry::{
    BinaryMask, CameraIntrinsics, CameraPose, DepthMap, RgbFrame, RigidTransform, Trajectory, NEAR_PLANE,
};
use crate::io;
use crate::{Error, Result};

/// Displacement written for points with no valid projection.
pub const UNKNOWN_FLOW: f32 = 1e10;

/// Relative depth agreement required for two hits to be the same point.
const SAME_POINT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    /// Plane `p[axis] = offset`. `bounds` limits the two remaining axes, in
    /// increasing axis order, to half-open ranges.
    Plane {
        axis: Axis,
        offset: f64,
        #[serde(default)]
        bounds: Option<[[f64; 2]; 2]>,
    },
    Box {
        min: [f64; 3],
        max: [f64; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    #[serde(default)]
    pub texture: Texture,
}

/// Rigid motion of one primitive: `transforms[k]` maps its rest position
/// to its world position in frame `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingObject {
    pub primitive: usize,
    pub transforms: Vec<RigidTransform>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
    pub camera: CameraIntrinsics,
    /// World-to-camera pose per frame.
    pub poses: Vec<CameraPose>,
    #[serde(default)]
    pub moving_objects: Vec<MovingObject>,
    #[serde(default)]
    pub seed: u64,
}

/// Nearest surface point along a ray, in the primitive's rest frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit {
    pub primitive: usize,
    /// Normal axis of the face that was hit.
    pub face: usize,
    pub local: Vector3<f64>,
    /// Camera-space z of the hit.
    pub depth: f64,
}

/// A validated scene ready for ray queries.
#[derive(Debug, Clone)]
pub struct SynthScene {
    spec: SceneSpec,
    /// Per primitive, per frame transform; empty for static primitives.
    motion: Vec<Vec<RigidTransform>>,
}

fn intersect(shape: &Shape, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<(f64, usize)> {
    match shape {
        Shape::Plane { axis, offset, bounds } => {
            let a = axis.index();
            if d[a] == 0.0 {
                return None;
            }
            let t = (offset - o[a]) / d[a];
            if t <= NEAR_PLANE {
                return None;
            }
            if let Some(b) = bounds {
                let p = o + d * t;
                let others = [(a + 1) % 3, (a + 2) % 3];
                let (i, j) = (others[0].min(others[1]), others[0].max(others[1]));
                let inside = |v: f64, r: [f64; 2]| v >= r[0] && v < r[1];
                if !inside(p[i], b[0]) || !inside(p[j], b[1]) {
                    return None;
                }
            }
            Some((t, a))
        }
        Shape::Box { min, max } => {
            let (mut t0, mut t1, mut face) = (f64::NEG_INFINITY, f64::INFINITY, 0);
            for a in 0..3 {
                if d[a] == 0.0 {
                    if o[a] < min[a] || o[a] >= max[a] {
                        return None;
                    }
                    continue;
                }
                let (ta, tb) = ((min[a] - o[a]) / d[a], (max[a] - o[a]) / d[a]);
                let (near, far) = if ta < tb { (ta, tb) } else { (tb, ta) };
                if near > t0 {
                    t0 = near;
                    face = a;
                }
                t1 = t1.min(far);
            }
            (t0 <= t1 && t0 > NEAR_PLANE).then_some((t0, face))
        }
    }
}

fn surface_coords(local: &Vector3<f64>, face: usize) -> (f64, f64) {
    let others = [(face + 1) % 3, (face + 2) % 3];
    (local[others[0].min(others[1])], local[others[0].max(others[1])])
}

impl SynthScene {
    pub fn new(spec: SceneSpec) -> Result<Self> {
        spec.camera.validate()?;
        if spec.primitives.is_empty() {
            return Err(Error::InvalidParameter("scene has no primitives".into()));
        }
        let n = spec.poses.len();
        if n == 0 {
            return Err(Error::InvalidParameter("scene has no camera poses".into()));
        }
        for (i, p) in spec.primitives.iter().enumerate() {
            if let Shape::Box { min, max } = &p.shape {
                if (0..3).any(|a| !(min[a] < max[a])) {
                    return Err(Error::InvalidParameter(format!("box {i} has an empty extent")));
                }
            }
            if p.texture.noise_cell <= 0.0 || p.texture.cell.is_some_and(|c| c <= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "primitive {i} has a non-positive texture scale"
                )));
            }
        }
        let mut motion = vec![Vec::new(); spec.primitives.len()];
        for m in &spec.moving_objects {
            if m.primitive >= spec.primitives.len() {
                return Err(Error::InvalidParameter(format!(
                    "moving object refers to missing primitive {}",
                    m.primitive
                )));
            }
            if m.transforms.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "primitive {} has {} transforms for {n} frames",
                    m.primitive,
                    m.transforms.len()
                )));
            }
            motion[m.primitive] = m.transforms.clone();
        }
        let scene = Self { spec, motion };
        for k in 0..n {
            let c = scene.spec.poses[k].center();
            for (i, p) in scene.spec.primitives.iter().enumerate() {
                let l = scene.to_local(i, k, &c);
                let degenerate = match &p.shape {
                    Shape::Box { min, max } => (0..3).all(|a| l[a] > min[a] && l[a] < max[a]),
                    Shape::Plane { axis, offset, .. } => (l[axis.index()] - offset).abs() < 1e-9,
                };
                if degenerate {
                    return Err(Error::DegenerateScene(format!(
                        "camera {k} lies inside or on primitive {i}"
                    )));
                }
            }
        }
        Ok(scene)
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn frame_count(&self) -> usize {
        self.spec.poses.len()
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.spec.camera
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            intrinsics: self.spec.camera,
            poses: self.spec.poses.clone(),
        }
    }

    fn transform(&self, primitive: usize, frame: usize) -> Option<&RigidTransform> {
        self.motion[primitive].get(frame)
    }

    fn to_local(&self, primitive: usize, frame: usize, world: &Vector3<f64>) -> Vector3<f64> {
        match self.transform(primitive, frame) {
            Some(t) => t.inverse_transform_point(world),
            None => *world,
        }
    }

    fn to_world(&self, primitive: usize, frame: usize, local: &Vector3<f64>) -> Vector3<f64> {
        match self.transform(primitive, frame) {
            Some(t) => t.transform_point(local),
            None => *local,
        }
    }

    /// Nearest hit along the ray through continuous image position `(x, y)`
    /// of `frame` (pixel `(u, v)` spans `[u, u+1) x [v, v+1)`).
    pub fn trace(&self, frame: usize, x: f64, y: f64) -> Option<SurfaceHit> {
        let k = &self.spec.camera;
        let pose = &self.spec.poses[frame];
        let origin = pose.center();
        // Unit camera-z keeps the ray parameter equal to depth.
        let dir_cam = Vector3::new((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
        let dir = pose.rotation.transpose() * dir_cam;
        let mut best: Option<SurfaceHit> = None;
        for (i, p) in self.spec.primitives.iter().enumerate() {
            let (o, d) = match self.transform(i, frame) {
                Some(t) => (t.inverse_transform_point(&origin), t.rotation.transpose() * dir),
                None => (origin, dir),
            };
            if let Some((t, face)) = intersect(&p.shape, &o, &d) {
                if best.is_none_or(|b| t < b.depth) {
                    best = Some(SurfaceHit {
                        primitive: i,
                        face,
                        local: o + d * t,
                        depth: t,
                    });
                }
            }
        }
        best
    }

    pub fn color(&self, hit: &SurfaceHit) -> [u8; 3] {
        let (a, b) = surface_coords(&hit.local, hit.face);
        self.spec.primitives[hit.primitive]
            .texture
            .color(self.spec.seed, hit.face, a, b)
    }

    /// Continuous image position and depth of `hit` in `frame`, if it lies
    /// in front of the camera.
    pub fn project_hit(&self, hit: &SurfaceHit, frame: usize) -> Option<[f64; 3]> {
        let k = &self.spec.camera;
        let world = self.to_world(hit.primitive, frame, &hit.local);
        let c = self.spec.poses[frame].transform_point(&world);
        if c.z <= NEAR_PLANE {
            return None;
        }
        Some([k.fx * c.x / c.z + k.cx, k.fy * c.y / c.z + k.cy, c.z])
    }

    /// Whether `hit` is the nearest surface at its projection in `frame`.
    pub fn is_visible(&self, hit: &SurfaceHit, frame: usize) -> bool {
        let k = &self.spec.camera;
        let Some([x, y, z]) = self.project_hit(hit, frame) else {
            return false;
        };
        if !(0.0..k.width as f64).contains(&x) || !(0.0..k.height as f64).contains(&y) {
            return false;
        }
        self.trace(frame, x, y)
            .is_some_and(|h| h.primitive == hit.primitive && (h.depth - z).abs() <= SAME_POINT_TOL * z.max(1.0))
    }

    /// Displacement of the surface seen at `(x, y)` in `from` to its
    /// position in `to`, regardless of occlusion.
    pub fn flow_at(&self, from: usize, to: usize, x: f64, y: f64) -> Option<[f64; 2]> {
        let hit = self.trace(from, x, y)?;
        let [px, py, _] = self.project_hit(&hit, to)?;
        Some([px - x, py - y])
    }

    /// Frame and depth map for `frame`. Pixels with no hit are black with
    /// invalid depth.
    pub fn render(&self, frame: usize) -> (RgbFrame, DepthMap) {
        let k = &self.spec.camera;
        let hits = self.trace_frame(frame);
        let img = RgbFrame::from_fn(k.width as u32, k.height as u32, |x, y| {
            image::Rgb(
                hits[y as usize * k.width + x as usize]
                    .as_ref()
                    .map_or([0, 0, 0], |h| self.color(h)),
            )
        });
        let values = hits.iter().map(|h| h.map_or(0.0, |h| h.depth as f32)).collect();
        let valid = hits.iter().map(Option::is_some).collect();
        let depth = DepthMap::with_validity(k.width, k.height, values, valid).expect("sized buffers");
        (img, depth)
    }

    fn trace_frame(&self, frame: usize) -> Vec<Option<SurfaceHit>> {
        let k = &self.spec.camera;
        (0..k.width * k.height)
            .into_par_iter()
            .map(|i| self.trace(frame, (i % k.width) as f64 + 0.5, (i / k.width) as f64 + 0.5))
            .collect()
    }

    /// Dense flow from `from` to `to` and its occlusion-aware validity
    /// (the source pixel's surface is visible in `to`).
    pub fn flow(&self, from: usize, to: usize) -> (FlowField, BinaryMask) {
        let k = &self.spec.camera;
        let (w, h) = (k.width, k.height);
        let hits = self.trace_frame(from);
        let per_pixel: Vec<(f32, f32, bool)> = hits
            .par_iter()
            .enumerate()
            .map(|(i, hit)| {
                let (cx, cy) = ((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
                let Some(hit) = hit else {
                    return (UNKNOWN_FLOW, UNKNOWN_FLOW, false);
                };
                match self.project_hit(hit, to) {
                    Some([x, y, _]) => ((x - cx) as f32, (y - cy) as f32, self.is_visible(hit, to)),
                    None => (UNKNOWN_FLOW, UNKNOWN_FLOW, false),
                }
            })
            .collect();
        let u = per_pixel.iter().map(|p| p.0).collect();
        let v = per_pixel.iter().map(|p| p.1).collect();
        let valid = per_pixel.iter().map(|p| p.2).collect();
        (
            FlowField::new(w, h, u, v, from, to).expect("finite flow"),
            BinaryMask::new(w, h, valid).expect("sized buffer"),
        )
    }

    /// Pixels of `frame` whose surface is visible in the first frame.
    pub fn visibility(&self, frame: usize) -> BinaryMask {
        self.flow(frame, 0).1
    }
}

/// Everything [`generate`] produces. Flow index `k` connects frame 0 and
/// frame `k` (index 0 is the zero flow).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthBundle {
    pub frames: Vec<RgbFrame>,
    pub depths: Vec<DepthMap>,
    pub forward: Vec<FlowField>,
    pub forward_valid: Vec<BinaryMask>,
    pub backward: Vec<FlowField>,
    pub visibility: Vec<BinaryMask>,
    pub trajectory: Trajectory,
}

pub fn generate(spec: &SceneSpec) -> Result<SynthBundle> {
    let scene = SynthScene::new(spec.clone())?;
    let n = scene.frame_count();
    let (frames, depths): (Vec<_>, Vec<_>) = (0..n).map(|k| scene.render(k)).unzip();
    let (forward, forward_valid): (Vec<_>, Vec<_>) = (0..n).map(|k| scene.flow(0, k)).unzip();
    let (backward, visibility): (Vec<_>, Vec<_>) = (0..n).map(|k| scene.flow(k, 0)).unzip();
    Ok(SynthBundle {
        frames,
        depths,
        forward,
        forward_valid,
        backward,
        visibility,
        trajectory: scene.trajectory(),
    })
}

/// Writes `frame_#####.png`, `depth_#####.pfm`, `fwd_#####.flo` (0 to k),
/// `bwd_#####.flo` (k to 0), `vis_#####.png`, `trajectory.json` and the
/// echoed `scene.json` into `dir`.
pub fn write_bundle(dir: &Path, spec: &SceneSpec, bundle: &SynthBundle) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    (0..bundle.frames.len())
        .into_par_iter()
        .try_for_each(|k| -> Result<()> {
            io::write_frame(&io::sequence_path(dir, "frame", k, "png"), &bundle.frames[k])?;
            io::write_depth(&io::sequence_path(dir, "depth", k, "pfm"), &bundle.depths[k])?;
            io::write_flo(&io::sequence_path(dir, "fwd", k, "flo"), &bundle.forward[k])?;
            io::write_flo(&io::sequence_path(dir, "bwd", k, "flo"), &bundle.backward[k])?;
            io::write_mask(&io::sequence_path(dir, "vis", k, "png"), &bundle.visibility[k])
        })?;
    io::write_trajectory(&dir.join("trajectory.json"), &bundle.trajectory)?;
    let text = serde_json::to_string_pretty(spec).expect("spec serializes");
    io::write_bytes(&dir.join("scene.json"), text.as_bytes())
}
