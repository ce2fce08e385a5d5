#![allow(dead_code)]

use epic_core::flow::FlowPair;
use epic_core::geometry::{BinaryMask, RgbFrame};
use epic_core::synth::SynthBundle;

/// PSNR over all channels of the pixels where `mask` is set; infinite when
/// they match exactly.
pub fn masked_psnr(a: &RgbFrame, b: &RgbFrame, mask: &BinaryMask) -> f64 {
    let (mut se, mut n) = (0.0f64, 0usize);
    for (x, y, p) in a.enumerate_pixels() {
        if !mask.get(x as usize, y as usize) {
            continue;
        }
        let q = b.get_pixel(x, y);
        for c in 0..3 {
            let d = p.0[c] as f64 - q.0[c] as f64;
            se += d * d;
        }
        n += 3;
    }
    assert!(n > 0, "empty comparison mask");
    let mse = se / n as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

pub fn agreement(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let same = a.as_slice().iter().zip(b.as_slice()).filter(|(x, y)| x == y).count();
    same as f64 / a.as_slice().len() as f64
}

/// Direct first-to-k flow pairs for frames `1..n` of a bundle.
pub fn direct_pairs(bundle: &SynthBundle) -> Vec<FlowPair> {
    (1..bundle.frames.len())
        .map(|k| FlowPair::direct(bundle.forward[k].clone(), bundle.backward[k].clone()))
        .collect()
}
