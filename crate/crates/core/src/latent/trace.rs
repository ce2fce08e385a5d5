use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{control_forward, fuse, injection_gate, ControlBlockParams, LatentGrid, LatentMask};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoiseSchedule {
    pub total_steps: usize,
    /// Leading fraction of steps that receive control.
    pub fraction: f64,
}

impl Default for DenoiseSchedule {
    fn default() -> Self {
        Self {
            total_steps: 50,
            fraction: 0.4,
        }
    }
}

/// One iteration of the simulated sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub step: usize,
    pub gated: bool,
    /// Stub backbone output for this step.
    pub base: LatentGrid,
    /// Latent after fusion; input of the next step.
    pub latent: LatentGrid,
}

/// Stand-in backbone: a fixed seeded channel-mixing matrix applied at every
/// position, contractive so long traces stay bounded.
struct StubBase {
    channels: usize,
    weights: Vec<f32>,
}

impl StubBase {
    fn new(channels: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = 0.8 / (channels as f32).sqrt();
        let weights = (0..channels * channels)
            .map(|_| StandardNormal.sample(rng))
            .map(|v: f32| v * scale)
            .collect();
        Self { channels, weights }
    }

    fn apply(&self, z: &LatentGrid) -> LatentGrid {
        let (lf, ch, lh, lw) = z.shape();
        let mut out = LatentGrid::zeros(lf, ch, lh, lw);
        for t in 0..lf {
            for y in 0..lh {
                for x in 0..lw {
                    for o in 0..self.channels {
                        let row = &self.weights[o * ch..(o + 1) * ch];
                        let mut acc = 0f32;
                        for (c, w) in row.iter().enumerate() {
                            acc += w * z.get(t, c, y, x);
                        }
                        let i = out.index(t, o, y, x);
                        out.data_mut()[i] = acc;
                    }
                }
            }
        }
        out
    }
}

/// Runs `schedule.total_steps` iterations of stub backbone, then (on gated
/// steps, when `params` is given) control block and masked fusion.
///
/// The starting noise and the stub backbone come from `seed`; the latent
/// has `params.config.backbone_dim` channels, or `channels` when running
/// without control.
pub fn simulate_denoise_trace(
    z_anchor: &LatentGrid,
    mask: &LatentMask,
    params: Option<&ControlBlockParams>,
    channels: usize,
    schedule: DenoiseSchedule,
    seed: u64,
) -> Result<Vec<TraceStep>> {
    if !mask.matches(z_anchor) {
        return Err(Error::Shape("latent mask does not match the anchor latent".into()));
    }
    if let Some(p) = params {
        if p.config.backbone_dim != channels {
            return Err(Error::Shape(format!(
                "latent has {channels} channels but control block outputs {}",
                p.config.backbone_dim
            )));
        }
    }
    if channels == 0 {
        return Err(Error::InvalidParameter("latent channel count must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&schedule.fraction) {
        return Err(Error::InvalidParameter(format!(
            "gate fraction {} outside [0, 1]",
            schedule.fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lf, _, lh, lw) = z_anchor.shape();
    let noise: Vec<f32> = (0..lf * channels * lh * lw)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut z = LatentGrid::new(lf, channels, lh, lw, noise)?;
    let stub = StubBase::new(channels, &mut rng);

    let mut trace = Vec::with_capacity(schedule.total_steps);
    for step in 0..schedule.total_steps {
        let base = stub.apply(&z);
        let gated = params.is_some() && injection_gate(step, schedule.total_steps, schedule.fraction);
        let latent = match params {
            Some(p) if gated => {
                let control = control_forward(&z, z_anchor, p)?;
                fuse(&base, &control, mask)?
            }
            _ => base.clone(),
        };
        z = latent.clone();
        trace.push(TraceStep {
            step,
            gated,
            base,
            latent,
        });
    }
    Ok(trace)
}

/// Positionwise comparison of a fused latent against its base.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepAudit {
    pub step: usize,
    pub gated: bool,
    /// `(frame, y, x)` positions where any channel differs bitwise.
    pub changed_positions: usize,
    /// Changed positions where the mask is zero; always 0 when fusion is sound.
    pub changed_outside_mask: usize,
    /// Positions with a non-zero mask value.
    pub mask_support: usize,
    /// Changed set equals the mask support exactly.
    pub support_equals_mask: bool,
}

pub fn audit_step(step: &TraceStep, mask: &LatentMask) -> StepAudit {
    let (lf, ch, lh, lw) = step.base.shape();
    let mut changed_positions = 0;
    let mut changed_outside_mask = 0;
    let mut mask_support = 0;
    let mut support_equals_mask = true;
    for t in 0..lf {
        for y in 0..lh {
            for x in 0..lw {
                let changed =
                    (0..ch).any(|c| step.base.get(t, c, y, x).to_bits() != step.latent.get(t, c, y, x).to_bits());
                let visible = mask.get(t, y, x) != 0.0;
                changed_positions += changed as usize;
                changed_outside_mask += (changed && !visible) as usize;
                mask_support += visible as usize;
                support_equals_mask &= changed == visible;
            }
        }
    }
    StepAudit {
        step: step.step,
        gated: step.gated,
        changed_positions,
        changed_outside_mask,
        mask_support,
        support_equals_mask,
    }
}
