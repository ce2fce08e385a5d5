use crate::{Error, Result};

/// Row-major `{0, 1}` grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "mask buffer has {} values, expected {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v).count()
    }

    /// Fraction of set pixels.
    pub fn fraction(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.count() as f64 / self.data.len() as f64
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|v| *v)
    }

    pub fn is_full(&self) -> bool {
        self.data.iter().all(|v| *v)
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| !v).collect(),
        }
    }

    /// True if every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.data.iter().zip(&other.data).all(|(a, b)| !a || *b)
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Integer offsets `(dx, dy)` with `dx² + dy² ≤ radius²`, in row-major order.
pub fn disc_offsets(radius: u32) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Morphological dilation with a Euclidean disc of the given radius.
pub fn dilate(mask: &BinaryMask, radius: u32) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width as i64, mask.height as i64);
    let r = radius as i64;
    // Half-width of the disc at each vertical offset.
    let spans: Vec<i64> = (-r..=r)
        .map(|dy| ((r * r - dy * dy) as f64).sqrt().floor() as i64)
        .collect();
    let mut out = BinaryMask::filled(mask.width, mask.height, false);
    for y in 0..h {
        for x in 0..w {
            if !mask.data[(y * w + x) as usize] {
                continue;
            }
            for (k, dy) in (-r..=r).enumerate() {
                let yy = y + dy;
                if yy < 0 || yy >= h {
                    continue;
                }
                let x0 = (x - spans[k]).max(0);
                let x1 = (x + spans[k]).min(w - 1);
                let row = (yy * w) as usize;
                out.data[row + x0 as usize..=row + x1 as usize].fill(true);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Brute-force reference: a pixel is set iff some set pixel lies within
    // Euclidean distance `radius`.
    fn dilate_reference(mask: &BinaryMask, radius: u32) -> BinaryMask {
        let r2 = (radius * radius) as i64;
        BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
            (0..mask.height()).any(|sy| {
                (0..mask.width()).any(|sx| {
                    let dx = sx as i64 - x as i64;
                    let dy = sy as i64 - y as i64;
                    mask.get(sx, sy) && dx * dx + dy * dy <= r2
                })
            })
        })
    }

    #[test]
    fn radius_zero_is_identity() {
        let m = BinaryMask::from_fn(7, 5, |x, y| (x * 3 + y) % 4 == 0);
        assert_eq!(dilate(&m, 0), m);
    }

    #[test]
    fn single_pixel_radius_two_covers_thirteen() {
        let mut m = BinaryMask::filled(21, 21, false);
        m.set(10, 10, true);
        let d = dilate(&m, 2);
        assert_eq!(d.count(), 13);
        assert_eq!(disc_offsets(2).len(), 13);
        for y in 0..21 {
            for x in 0..21 {
                let dist2 = (x as i64 - 10).pow(2) + (y as i64 - 10).pow(2);
                assert_eq!(d.get(x, y), dist2 <= 4);
            }
        }
    }

    #[test]
    fn full_mask_saturates() {
        let m = BinaryMask::filled(9, 4, true);
        assert!(dilate(&m, 3).is_full());
    }

    proptest! {
        #[test]
        fn matches_reference_and_is_monotone(
            bits in prop::collection::vec(prop::bool::weighted(0.08), 12 * 9),
            radius in 0u32..5,
        ) {
            let m = BinaryMask::new(12, 9, bits).unwrap();
            let d = dilate(&m, radius);
            prop_assert!(m.is_subset_of(&d));
            prop_assert_eq!(d, dilate_reference(&m, radius));
        }
    }
}
