use serde::{Deserialize, Serialize};

/// Procedural surface texture: a two-color checkerboard blended with value
/// noise. Colors and noise are fixed by `(id, scene seed, face)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Texture {
    pub id: u32,
    /// Checker cell size in surface units; `None` gives a smooth texture.
    pub cell: Option<f64>,
    /// Surface-coordinate shift applied before the checker lookup.
    pub offset: [f64; 2],
    /// Noise lattice spacing in surface units.
    pub noise_cell: f64,
    /// Noise weight in [0, 1].
    pub noise_amplitude: f64,
}

impl Default for Texture {
    fn default() -> Self {
        Self {
            id: 0,
            cell: Some(0.25),
            offset: [0.0, 0.0],
            noise_cell: 0.15,
            noise_amplitude: 0.35,
        }
    }
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit(keys: &[u64]) -> f64 {
    let h = keys.iter().fold(0u64, |acc, &k| mix64(acc ^ k));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

impl Texture {
    pub(crate) fn color(&self, seed: u64, face: usize, a: f64, b: f64) -> [u8; 3] {
        let key = |x: i64, y: i64, c: u64| [seed, self.id as u64, face as u64, x as u64, y as u64, c];
        let parity = match self.cell {
            Some(cell) => {
                let i = ((a + self.offset[0]) / cell).floor() as i64;
                let j = ((b + self.offset[1]) / cell).floor() as i64;
                (i + j).rem_euclid(2) == 1
            }
            None => false,
        };
        let (ga, gb) = (a / self.noise_cell, b / self.noise_cell);
        let (ia, ib) = (ga.floor(), gb.floor());
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let (sa, sb) = (smooth(ga - ia), smooth(gb - ib));
        let (ia, ib) = (ia as i64, ib as i64);
        let mut out = [0u8; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let c = c as u64;
            let base = 40.0 + 175.0 * unit(&key(i64::MIN, i64::MIN, c));
            let base = if parity { 255.0 - base } else { base };
            let n00 = unit(&key(ia, ib, c));
            let n10 = unit(&key(ia + 1, ib, c));
            let n01 = unit(&key(ia, ib + 1, c));
            let n11 = unit(&key(ia + 1, ib + 1, c));
            let top = n00 + (n10 - n00) * sa;
            let bottom = n01 + (n11 - n01) * sa;
            let n = top + (bottom - top) * sb;
            let v = (1.0 - self.noise_amplitude) * base + self.noise_amplitude * 255.0 * n;
            *o = v.round().clamp(0.0, 255.0) as u8;
        }
        out
    }
}
