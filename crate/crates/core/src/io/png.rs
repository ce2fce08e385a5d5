use std::path::Path;

use image::{GrayImage, ImageFormat, Luma};

use crate::geometry::{BinaryMask, RgbFrame};
use crate::{Error, Result};

fn open(path: &Path) -> Result<image::DynamicImage> {
    let reader = image::ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|e| Error::format(path, e.to_string()))
}

pub fn read_frame(path: &Path) -> Result<RgbFrame> {
    Ok(open(path)?.into_rgb8())
}

pub fn write_frame(path: &Path, frame: &RgbFrame) -> Result<()> {
    frame
        .save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Grayscale PNG mask; values ≥ 128 are set.
pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    let gray = open(path)?.into_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    BinaryMask::new(w, h, gray.pixels().map(|p| p.0[0] >= 128).collect())
}

/// Writes set pixels as 255 and clear pixels as 0.
pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    let img = GrayImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        Luma([if mask.get(x as usize, y as usize) { 255 } else { 0 }])
    });
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::format(path, e.to_string()))
}
