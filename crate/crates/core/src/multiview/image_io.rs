//! 8-bit PNG images and masks, one file per view.

use std::path::Path;

use image::{GrayImage, RgbImage};

use super::{MaskStack2D, MultiViewFeature};
use crate::error::{Error, Result};

/// Reads RGB or RGBA PNGs as a 3-channel stack in `[0, 1]`; alpha is dropped.
pub fn read_images<P: AsRef<Path>>(paths: &[P]) -> Result<MultiViewFeature> {
    let mut data = Vec::new();
    let mut size = None;
    for p in paths {
        let img = image::open(p.as_ref())?.to_rgb8();
        check_size(&mut size, img.dimensions(), p.as_ref())?;
        data.extend(img.as_raw().iter().map(|v| *v as f32 / 255.0));
    }
    let (w, h) = size.ok_or_else(|| Error::Precondition("no images given".into()))?;
    MultiViewFeature::new(paths.len(), h as usize, w as usize, 3, data)
}

/// Writes each view of a 3-channel stack, rounding `[0, 1]` to 8 bits.
pub fn write_images<P: AsRef<Path>>(images: &MultiViewFeature, paths: &[P]) -> Result<()> {
    if images.channels() != 3 {
        return Err(Error::Dimension(format!(
            "PNG output needs 3 channels, got {}",
            images.channels()
        )));
    }
    check_count(images.views(), paths.len())?;
    let (h, w) = (images.height(), images.width());
    let n = h * w * 3;
    for (v, p) in paths.iter().enumerate() {
        let bytes = images.data()[v * n..(v + 1) * n]
            .iter()
            .map(|x| quantize(*x))
            .collect();
        let img = RgbImage::from_raw(w as u32, h as u32, bytes).expect("buffer sized from extents");
        img.save(p.as_ref())?;
    }
    Ok(())
}

/// Reads grayscale (or color, via luma) PNG masks; `>= 128` is set.
pub fn read_masks<P: AsRef<Path>>(paths: &[P]) -> Result<MaskStack2D> {
    let mut data = Vec::new();
    let mut size = None;
    for p in paths {
        let img = image::open(p.as_ref())?.to_luma8();
        check_size(&mut size, img.dimensions(), p.as_ref())?;
        data.extend(
            img.as_raw()
                .iter()
                .map(|v| if *v >= 128 { 1.0 } else { 0.0 }),
        );
    }
    let (w, h) = size.ok_or_else(|| Error::Precondition("no masks given".into()))?;
    MaskStack2D::new(paths.len(), h as usize, w as usize, data)
}

pub fn write_masks<P: AsRef<Path>>(masks: &MaskStack2D, paths: &[P]) -> Result<()> {
    check_count(masks.views(), paths.len())?;
    let (h, w) = (masks.height(), masks.width());
    for (v, p) in paths.iter().enumerate() {
        let bytes = masks.data()[v * h * w..(v + 1) * h * w]
            .iter()
            .map(|x| quantize(*x))
            .collect();
        let img =
            GrayImage::from_raw(w as u32, h as u32, bytes).expect("buffer sized from extents");
        img.save(p.as_ref())?;
    }
    Ok(())
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn check_size(size: &mut Option<(u32, u32)>, dims: (u32, u32), path: &Path) -> Result<()> {
    match size {
        None => *size = Some(dims),
        Some(s) if *s != dims => {
            return Err(Error::Dimension(format!(
                "{} is {}x{}, expected {}x{}",
                path.display(),
                dims.0,
                dims.1,
                s.0,
                s.1
            )))
        }
        Some(_) => {}
    }
    Ok(())
}

fn check_count(views: usize, paths: usize) -> Result<()> {
    if views != paths {
        return Err(Error::Dimension(format!(
            "{views} views but {paths} output paths"
        )));
    }
    Ok(())
}
