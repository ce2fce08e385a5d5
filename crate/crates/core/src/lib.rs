//! Anchor-video machinery for camera-controlled video generation.
//!
//! The crate covers the full data path around an anchor video:
//!
//! * [`flow`]: masking-based anchors built from a source video and dense
//!   optical flow (first-frame visibility tracking with mask freezing).
//! * [`inject`]: synthetic flying-pixel rays drawn into training anchors.
//! * [`render`]: point-cloud anchors rendered along camera trajectories,
//!   with masked, dynamic (per-frame) and object-motion variants.
//! * [`latent`]: a toy-scale control block, visibility-aware latent fusion,
//!   mask pooling and step gating.
//! * [`metrics`]: rotation / translation / camera-matrix trajectory errors.
//! * [`synth`]: an analytic synthetic-scene generator used as ground truth.
//!
//! Shared camera, pose, depth and mask types live in [`geometry`]; file
//! formats live in [`io`].

pub mod error;
pub mod flow;
pub mod geometry;
pub mod inject;
pub mod io;
pub mod latent;
pub mod metrics;
pub mod render;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
