use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Orthonormality tolerance every stored rotation satisfies.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

/// Looser tolerance for rotations coming from upstream estimators; these are
/// projected onto the nearest rotation when accepted.
pub const UPSTREAM_POSE_TOL: f64 = 1e-3;

/// Rigid world-to-camera transform: `x_cam = rotation * x_world + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 12]", into = "[f64; 12]")]
pub struct CameraPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

/// Rigid motion applied to world points: `x' = rotation * x + translation`.
pub type RigidTransform = CameraPose;

fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    let gram = r.transpose() * r - Matrix3::identity();
    let ortho = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ortho.max((r.determinant() - 1.0).abs())
}

impl CameraPose {
    /// Strict constructor: the rotation must already be orthonormal within
    /// [`ORTHONORMAL_TOL`].
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidPose("non-finite entries".into()));
        }
        let err = orthonormality_error(&rotation);
        if err > ORTHONORMAL_TOL {
            return Err(Error::InvalidPose(format!(
                "rotation is not orthonormal (deviation {err:.3e})"
            )));
        }
        Ok(Self { rotation, translation })
    }

    /// Accepts rotations within [`UPSTREAM_POSE_TOL`] of orthonormal and
    /// snaps them to the nearest rotation (polar decomposition).
    pub fn new_projected(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidPose("non-finite entries".into()));
        }
        let err = orthonormality_error(&rotation);
        if err > UPSTREAM_POSE_TOL {
            return Err(Error::InvalidPose(format!(
                "rotation deviates from orthonormal by {err:.3e} (limit {UPSTREAM_POSE_TOL:.0e})"
            )));
        }
        if err <= f64::EPSILON * 8.0 {
            return Self::new(rotation, translation);
        }
        let svd = rotation.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut nearest = u * v_t;
        if nearest.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            nearest = u * v_t;
        }
        Self::new(nearest, translation)
    }

    pub(crate) fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).into_inner();
        Self { rotation, translation }
    }

    /// Pose of a camera centered at `center` with camera-to-world rotation
    /// `orientation`.
    pub fn from_center(orientation: Matrix3<f64>, center: Vector3<f64>) -> Self {
        let rotation = orientation.transpose();
        Self {
            rotation,
            translation: -(rotation * center),
        }
    }

    /// Row-major 3x4 `[R | t]`.
    pub fn from_row_major(m: &[f64; 12]) -> Result<Self> {
        let (r, t) = split_row_major(m);
        Self::new(r, t)
    }

    /// Row-major 3x4 `[R | t]` with upstream tolerance.
    pub fn from_row_major_projected(m: &[f64; 12]) -> Result<Self> {
        let (r, t) = split_row_major(m);
        Self::new_projected(r, t)
    }

    #[rustfmt::skip]
    pub fn to_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t[0],
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t[1],
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t[2],
        ]
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        (self.rotation - Matrix3::identity()).amax() <= tol && self.translation.amax() <= tol
    }
}

fn split_row_major(m: &[f64; 12]) -> (Matrix3<f64>, Vector3<f64>) {
    let r = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
    let t = Vector3::new(m[3], m[7], m[11]);
    (r, t)
}

impl TryFrom<[f64; 12]> for CameraPose {
    type Error = Error;

    fn try_from(m: [f64; 12]) -> Result<Self> {
        Self::from_row_major_projected(&m)
    }
}

impl From<CameraPose> for [f64; 12] {
    fn from(p: CameraPose) -> Self {
        p.to_row_major()
    }
}

/// Rigid composition `a ∘ b`: a point is first mapped by `b`, then by `a`.
pub fn compose_poses(a: &CameraPose, b: &CameraPose) -> CameraPose {
    CameraPose {
        rotation: a.rotation * b.rotation,
        translation: a.rotation * b.translation + a.translation,
    }
}
