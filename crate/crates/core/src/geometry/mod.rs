//! Camera models, rigid poses, depth maps, binary masks and point clouds.

mod camera;
mod cloud;
mod depth;
mod mask;
mod pose;

pub use camera::{CameraIntrinsics, Trajectory};
pub use cloud::{project, unproject, unproject_indexed, PointCloud, Projection, NEAR_PLANE};
pub use depth::DepthMap;
pub use mask::{dilate, disc_offsets, BinaryMask};
pub use pose::{compose_poses, CameraPose, RigidTransform, ORTHONORMAL_TOL, UPSTREAM_POSE_TOL};

/// 8-bit RGB frame; row-major, origin at the top-left pixel.
pub type RgbFrame = image::RgbImage;
