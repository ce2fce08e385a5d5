use crate::{Error, Result};

/// Metric depth along the camera z axis with a per-pixel validity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
    valid: Vec<bool>,
}

impl DepthMap {
    /// Builds a depth map; pixels with non-finite or non-positive depth are
    /// marked invalid.
    pub fn from_values(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Shape(format!(
                "depth buffer has {} values, expected {width}x{height}",
                values.len()
            )));
        }
        let valid = values.iter().map(|d| d.is_finite() && *d > 0.0).collect();
        Ok(Self {
            width,
            height,
            values,
            valid,
        })
    }

    /// Builds a depth map with an explicit validity grid. Valid entries must
    /// be positive and finite.
    pub fn with_validity(width: usize, height: usize, values: Vec<f32>, valid: Vec<bool>) -> Result<Self> {
        if values.len() != width * height || valid.len() != width * height {
            return Err(Error::Shape(format!(
                "depth/validity buffers do not match {width}x{height}"
            )));
        }
        if let Some(i) = (0..values.len()).find(|&i| valid[i] && !(values[i].is_finite() && values[i] > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "valid depth at index {i} is {}, must be positive and finite",
                values[i]
            )));
        }
        Ok(Self {
            width,
            height,
            values,
            valid,
        })
    }

    pub fn constant(width: usize, height: usize, depth: f32) -> Result<Self> {
        Self::from_values(width, height, vec![depth; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Depth at `(x, y)` if valid.
    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        let i = y * self.width + x;
        self.valid[i].then_some(self.values[i])
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_values_flagged() {
        let d = DepthMap::from_values(2, 2, vec![1.0, 0.0, f32::NAN, -3.0]).unwrap();
        assert_eq!(d.get(0, 0), Some(1.0));
        assert_eq!(d.get(1, 0), None);
        assert_eq!(d.get(0, 1), None);
        assert_eq!(d.valid_count(), 1);
    }

    #[test]
    fn explicit_validity_checked() {
        assert!(DepthMap::with_validity(1, 1, vec![0.0], vec![true]).is_err());
        assert!(DepthMap::with_validity(1, 1, vec![0.0], vec![false]).is_ok());
        assert!(DepthMap::from_values(2, 2, vec![1.0]).is_err());
    }
}
