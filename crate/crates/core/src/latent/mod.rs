//! Toy-scale anchor conditioning: latent grids, visibility-mask pooling, a
//! reduced-width control block with a zero-initialized output projection,
//! masked latent fusion and step-gated injection.

mod control;
mod fuse;
mod pool;
mod trace;

use serde::{Deserialize, Serialize};

pub use control::{
    block_parameter_count, control_forward, BlockTopology, ControlBlockParams, ControlConfig, ControlLayer,
};
pub use fuse::{fuse, injection_gate, ungated_from};
pub use pool::{downsample_mask, latent_frame_count, temporal_windows, TEMPORAL_COMPRESSION};
pub use trace::{audit_step, simulate_denoise_trace, DenoiseSchedule, StepAudit, TraceStep};

use crate::{Error, Result};

/// Dense `frames x channels x height x width` tensor, row-major in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    frames: usize,
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl LatentGrid {
    pub fn new(frames: usize, channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if frames == 0 || channels == 0 || height == 0 || width == 0 {
            return Err(Error::Shape(format!(
                "latent dims must be >= 1, got {frames}x{channels}x{height}x{width}"
            )));
        }
        if data.len() != frames * channels * height * width {
            return Err(Error::Shape(format!(
                "latent payload has {} values, expected {frames}x{channels}x{height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("latent contains non-finite values".into()));
        }
        Ok(Self {
            frames,
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(frames: usize, channels: usize, height: usize, width: usize) -> Self {
        Self {
            frames,
            channels,
            height,
            width,
            data: vec![0.0; frames * channels * height * width],
        }
    }

    pub fn from_fn(
        frames: usize,
        channels: usize,
        height: usize,
        width: usize,
        f: impl Fn(usize, usize, usize, usize) -> f32,
    ) -> Self {
        let mut g = Self::zeros(frames, channels, height, width);
        for t in 0..frames {
            for c in 0..channels {
                for y in 0..height {
                    for x in 0..width {
                        let i = g.index(t, c, y, x);
                        g.data[i] = f(t, c, y, x);
                    }
                }
            }
        }
        g
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(frames, channels, height, width)`
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.frames, self.channels, self.height, self.width)
    }

    #[inline]
    pub fn index(&self, t: usize, c: usize, y: usize, x: usize) -> usize {
        ((t * self.channels + c) * self.height + y) * self.width + x
    }

    pub fn get(&self, t: usize, c: usize, y: usize, x: usize) -> f32 {
        self.data[self.index(t, c, y, x)]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }
}

/// Pooling mode; training pools by mean, inference by max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    Train,
    Inference,
}

/// Visibility mask at latent resolution, `frames x height x width`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMask {
    frames: usize,
    height: usize,
    width: usize,
    values: Vec<f32>,
    mode: MaskMode,
}

impl LatentMask {
    pub fn new(frames: usize, height: usize, width: usize, values: Vec<f32>, mode: MaskMode) -> Result<Self> {
        if frames == 0 || height == 0 || width == 0 || values.len() != frames * height * width {
            return Err(Error::Shape(format!(
                "latent mask payload of {} values does not fit {frames}x{height}x{width}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("latent mask value {v} outside [0, 1]")));
        }
        Ok(Self {
            frames,
            height,
            width,
            values,
            mode,
        })
    }

    pub fn filled(frames: usize, height: usize, width: usize, value: f32, mode: MaskMode) -> Self {
        Self {
            frames,
            height,
            width,
            values: vec![value; frames * height * width],
            mode,
        }
    }

    pub fn from_fn(
        frames: usize,
        height: usize,
        width: usize,
        mode: MaskMode,
        f: impl Fn(usize, usize, usize) -> f32,
    ) -> Self {
        let mut values = Vec::with_capacity(frames * height * width);
        for t in 0..frames {
            for y in 0..height {
                for x in 0..width {
                    values.push(f(t, y, x));
                }
            }
        }
        Self {
            frames,
            height,
            width,
            values,
            mode,
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn mode(&self) -> MaskMode {
        self.mode
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize) -> f32 {
        self.values[(t * self.height + y) * self.width + x]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// True when every value is exactly 0 or 1.
    pub fn is_hard(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0 || *v == 1.0)
    }

    pub fn matches(&self, grid: &LatentGrid) -> bool {
        self.frames == grid.frames && self.height == grid.height && self.width == grid.width
    }
}
