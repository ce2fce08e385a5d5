use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{Axis, MovingObject, Primitive, SceneSpec, Shape, Texture};
use crate::geometry::{CameraIntrinsics, CameraPose, RigidTransform};
use crate::{Error, Result};

pub const CANNED_SCENES: [&str; 4] = ["pan", "zoom", "two-plane-occlusion", "moving-box"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CannedOptions {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub seed: u64,
}

impl Default for CannedOptions {
    fn default() -> Self {
        Self {
            width: 180,
            height: 120,
            frames: 25,
            seed: 0,
        }
    }
}

fn checker(id: u32, cell: f64, noise_cell: f64) -> Texture {
    Texture {
        id,
        cell: Some(cell),
        offset: [0.0, 0.0],
        noise_cell,
        noise_amplitude: 0.35,
    }
}

fn plane(z: f64, bounds: Option<[[f64; 2]; 2]>, texture: Texture) -> Primitive {
    Primitive {
        shape: Shape::Plane {
            axis: Axis::Z,
            offset: z,
            bounds,
        },
        texture,
    }
}

fn centered_at(c: Vector3<f64>) -> CameraPose {
    CameraPose::from_center(Matrix3::identity(), c)
}

/// Built-in scenes.
///
/// Focal length scales with width (150 px at 180 px wide) and the principal
/// point sits on a pixel corner, so checker edges and plane borders land on
/// pixel edges. `pan` and `two-plane-occlusion` move content by whole
/// pixels per frame: 1 px for the pan plane and the far plane, 3 px for the
/// near plane.
pub fn canned_scene(name: &str, opts: &CannedOptions) -> Result<SceneSpec> {
    let CannedOptions {
        width: w,
        height: h,
        frames: n,
        seed,
    } = *opts;
    if w < 12 || h < 12 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "canned scene needs at least 12x12 and one frame, got {w}x{h}x{n}"
        )));
    }
    let f = 150.0 * w as f64 / 180.0;
    let camera = CameraIntrinsics::new(f, f, (w / 2) as f64, (h / 2) as f64, w, h)?;
    // World size of one pixel at depth z.
    let px = |z: f64| z / f;
    let (primitives, poses, moving_objects) = match name {
        "pan" => {
            let z = 4.0;
            let prims = vec![plane(z, None, checker(1, 8.0 * px(z), 5.0 * px(z)))];
            let poses = (0..n)
                .map(|k| centered_at(Vector3::new(k as f64 * px(z), 0.0, 0.0)))
                .collect();
            (prims, poses, vec![])
        }
        "zoom" => {
            let z = 6.0;
            let prims = vec![plane(z, None, checker(1, 8.0 * px(z), 5.0 * px(z)))];
            let poses = (0..n)
                .map(|k| centered_at(Vector3::new(0.0, 0.0, 0.06 * k as f64)))
                .collect();
            (prims, poses, vec![])
        }
        "two-plane-occlusion" => {
            let (zf, zn) = (9.0, 3.0);
            let (hw, hh) = ((w / 6) as f64 * px(zn), (h / 6) as f64 * px(zn));
            let prims = vec![
                plane(zf, None, checker(1, 8.0 * px(zf), 5.0 * px(zf))),
                plane(zn, Some([[-hw, hw], [-hh, hh]]), checker(2, 6.0 * px(zn), 4.0 * px(zn))),
            ];
            let poses = (0..n)
                .map(|k| centered_at(Vector3::new(k as f64 * px(zf), 0.0, 0.0)))
                .collect();
            (prims, poses, vec![])
        }
        "moving-box" => {
            let (zb, front) = (10.0, 5.0);
            let half = (w / 8) as f64 * px(front);
            let prims = vec![
                plane(zb, None, checker(1, 8.0 * px(zb), 5.0 * px(zb))),
                Primitive {
                    shape: Shape::Box {
                        min: [-half, -half, front],
                        max: [half, half, front + 2.0 * half],
                    },
                    texture: Texture {
                        id: 2,
                        cell: None,
                        offset: [0.0, 0.0],
                        noise_cell: 6.0 * px(front),
                        noise_amplitude: 0.8,
                    },
                },
            ];
            let transforms: Vec<RigidTransform> = (0..n)
                .map(|k| RigidTransform::from_translation(Vector3::new(k as f64 * px(front), 0.0, 0.0)))
                .collect();
            let poses = vec![CameraPose::identity(); n];
            (
                prims,
                poses,
                vec![MovingObject {
                    primitive: 1,
                    transforms,
                }],
            )
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown scene '{other}', expected one of {}",
                CANNED_SCENES.join(", ")
            )))
        }
    };
    Ok(SceneSpec {
        primitives,
        camera,
        poses,
        moving_objects,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SynthScene;

    #[test]
    fn all_canned_scenes_build() {
        let opts = CannedOptions {
            frames: 4,
            ..CannedOptions::default()
        };
        for name in CANNED_SCENES {
            let spec = canned_scene(name, &opts).unwrap();
            assert_eq!(spec.poses.len(), 4);
            SynthScene::new(spec).unwrap();
        }
        assert!(canned_scene("nope", &opts).is_err());
    }
}
