use super::{LatentGrid, LatentMask};
use crate::{Error, Result};

/// Visibility-aware fusion: `out = base + mask * control` per position,
/// broadcast over channels.
///
/// Positions where `mask * control` is zero keep the base value bit for bit,
/// so invisible positions never change. Soft (pooled-average) masks scale
/// the control signal.
pub fn fuse(base: &LatentGrid, control: &LatentGrid, mask: &LatentMask) -> Result<LatentGrid> {
    if base.shape() != control.shape() {
        return Err(Error::Shape(format!(
            "base {:?} and control {:?} differ",
            base.shape(),
            control.shape()
        )));
    }
    if !mask.matches(base) {
        return Err(Error::Shape(format!(
            "mask {}x{}x{} does not match latent {}x{}x{}",
            mask.frames(),
            mask.height(),
            mask.width(),
            base.frames(),
            base.height(),
            base.width()
        )));
    }
    let mut out = base.clone();
    let (lf, ch, lh, lw) = base.shape();
    for t in 0..lf {
        for y in 0..lh {
            for x in 0..lw {
                let m = mask.get(t, y, x);
                if m == 0.0 {
                    continue;
                }
                for c in 0..ch {
                    let i = base.index(t, c, y, x);
                    let add = if m == 1.0 {
                        control.data()[i]
                    } else {
                        m * control.data()[i]
                    };
                    if add != 0.0 {
                        out.data_mut()[i] = base.data()[i] + add;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Index of the first step without control injection:
/// `ceil(fraction * total_steps)`, clamped to `[0, total_steps]`.
pub fn ungated_from(total_steps: usize, fraction: f64) -> usize {
    let fraction = fraction.clamp(0.0, 1.0);
    // The epsilon absorbs representation error in products like 0.4 * 50.
    let raw = fraction * total_steps as f64 - 1e-9;
    (raw.ceil().max(0.0) as usize).min(total_steps)
}

/// True iff control is injected at `step_index`, i.e. the step falls in the
/// first `fraction` of the schedule.
pub fn injection_gate(step_index: usize, total_steps: usize, fraction: f64) -> bool {
    step_index < ungated_from(total_steps, fraction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent::MaskMode;

    fn grid(seed: u32) -> LatentGrid {
        LatentGrid::from_fn(2, 3, 4, 4, |t, c, y, x| {
            let k = (t as u32 * 131 + c as u32 * 31 + y as u32 * 7 + x as u32 + seed * 17) % 23;
            k as f32 * 0.25 - 2.0
        })
    }

    #[test]
    fn zero_mask_keeps_base_bits() {
        let (b, c) = (grid(1), grid(2));
        let m = LatentMask::filled(2, 4, 4, 0.0, MaskMode::Inference);
        let out = fuse(&b, &c, &m).unwrap();
        assert!(out.data().iter().zip(b.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn full_mask_adds_constant() {
        let b = grid(1);
        let c = LatentGrid::from_fn(2, 3, 4, 4, |_, _, _, _| 0.75);
        let m = LatentMask::filled(2, 4, 4, 1.0, MaskMode::Inference);
        let out = fuse(&b, &c, &m).unwrap();
        for (o, bv) in out.data().iter().zip(b.data()) {
            assert_eq!(*o, bv + 0.75);
        }
    }

    #[test]
    fn checkerboard_support() {
        let b = grid(3);
        let c = LatentGrid::from_fn(2, 3, 4, 4, |_, c, _, _| 1.0 + c as f32);
        let m = LatentMask::from_fn(2, 4, 4, MaskMode::Inference, |t, y, x| ((t + y + x) % 2) as f32);
        let out = fuse(&b, &c, &m).unwrap();
        for t in 0..2 {
            for y in 0..4 {
                for x in 0..4 {
                    let changed = (0..3).any(|ch| out.get(t, ch, y, x) != b.get(t, ch, y, x));
                    assert_eq!(changed, m.get(t, y, x) == 1.0);
                }
            }
        }
    }

    #[test]
    fn soft_mask_scales_linearly() {
        let b = grid(4);
        let c = LatentGrid::from_fn(2, 3, 4, 4, |_, _, y, _| y as f32);
        let m = LatentMask::filled(2, 4, 4, 0.5, MaskMode::Train);
        let out = fuse(&b, &c, &m).unwrap();
        assert_eq!(out.get(1, 2, 3, 0), b.get(1, 2, 3, 0) + 1.5);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let m = LatentMask::filled(2, 4, 4, 1.0, MaskMode::Inference);
        assert!(fuse(&grid(1), &LatentGrid::zeros(2, 2, 4, 4), &m).is_err());
        let m2 = LatentMask::filled(1, 4, 4, 1.0, MaskMode::Inference);
        assert!(fuse(&grid(1), &grid(2), &m2).is_err());
    }

    #[test]
    fn gate_first_forty_percent() {
        for (total, cut) in [(10, 4), (50, 20), (100, 40)] {
            assert_eq!(ungated_from(total, 0.4), cut);
            for s in 0..total {
                assert_eq!(injection_gate(s, total, 0.4), s < cut, "step {s} of {total}");
            }
        }
        assert!((0..7).all(|s| !injection_gate(s, 7, 0.0)));
        assert!((0..7).all(|s| injection_gate(s, 7, 1.0)));
        // Non-integral products round up.
        assert_eq!(ungated_from(7, 0.4), 3);
    }
}
