//! The 2D side of the pipeline: per-view features, masks and prompts.

mod image_io;
mod prompt;

pub use image_io::{read_images, read_masks, write_images, write_masks};
pub use prompt::{prompt_diff, DiffHunk, DiffStatus, PromptDiff, PromptPair};

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ColorSpec;

/// `V` views of `H×W×C` features, channel-fastest then x, y, view.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewFeature {
    views: usize,
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl MultiViewFeature {
    pub fn new(
        views: usize,
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        if views == 0 || height == 0 || width == 0 || channels == 0 {
            return Err(Error::Dimension("multi-view extents must be >= 1".into()));
        }
        let len = views * height * width * channels;
        if data.len() != len {
            return Err(Error::Dimension(format!(
                "{views}x{height}x{width}x{channels} features need {len} values, got {}",
                data.len()
            )));
        }
        crate::grid::check_finite(&data)?;
        Ok(Self {
            views,
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(views: usize, height: usize, width: usize, value: &[f32]) -> Result<Self> {
        let data = value
            .iter()
            .copied()
            .cycle()
            .take(views * height * width * value.len())
            .collect();
        Self::new(views, height, width, value.len(), data)
    }

    pub fn views(&self) -> usize {
        self.views
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, view: usize, y: usize, x: usize) -> &[f32] {
        let i = ((view * self.height + y) * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if (self.views, self.height, self.width, self.channels)
            != (other.views, other.height, other.width, other.channels)
        {
            return Err(Error::Dimension(format!(
                "feature shapes differ: {}x{}x{}x{} vs {}x{}x{}x{}",
                self.views,
                self.height,
                self.width,
                self.channels,
                other.views,
                other.height,
                other.width,
                other.channels
            )));
        }
        Ok(())
    }
}

/// `V` masks of `H×W` values in `[0, 1]`; 1 marks editable pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskStack2D {
    views: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl MaskStack2D {
    pub fn new(views: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if views == 0 || height == 0 || width == 0 {
            return Err(Error::Dimension("mask extents must be >= 1".into()));
        }
        if data.len() != views * height * width {
            return Err(Error::Dimension(format!(
                "{views}x{height}x{width} masks need {} values, got {}",
                views * height * width,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("mask value {v} outside [0, 1]")));
        }
        Ok(Self {
            views,
            height,
            width,
            data,
        })
    }

    pub fn from_fn(
        views: usize,
        height: usize,
        width: usize,
        f: impl Fn(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(views * height * width);
        for v in 0..views {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(v, y, x));
                }
            }
        }
        Self::new(views, height, width, data)
    }

    pub fn views(&self) -> usize {
        self.views
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, view: usize, y: usize, x: usize) -> f32 {
        self.data[(view * self.height + y) * self.width + x]
    }

    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0 || *v == 1.0)
    }

    /// Values `>= threshold` become 1, the rest 0.
    pub fn binarize(&self, threshold: f32) -> Self {
        Self {
            data: self
                .data
                .iter()
                .map(|v| if *v >= threshold { 1.0 } else { 0.0 })
                .collect(),
            ..self.clone()
        }
    }

    pub fn count_set(&self, view: usize) -> usize {
        let n = self.height * self.width;
        self.data[view * n..(view + 1) * n]
            .iter()
            .filter(|v| **v >= 0.5)
            .count()
    }

    fn view(&self, v: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[v * n..(v + 1) * n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DownsampleMode {
    /// Area average; values stay fractional near borders.
    #[default]
    AreaSoft,
    /// Nearest source pixel, then thresholded at 0.5.
    NearestBinary,
}

impl FromStr for DownsampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "area-soft" | "area_soft" => Ok(DownsampleMode::AreaSoft),
            "nearest-binary" | "nearest_binary" => Ok(DownsampleMode::NearestBinary),
            other => Err(Error::Domain(format!(
                "downsample mode must be area-soft or nearest-binary, got {other:?}"
            ))),
        }
    }
}

/// Shrinks every view to `height×width`.
///
/// `AreaSoft` averages integer blocks exactly; non-divisible sizes need
/// `allow_resample`, which switches to fractional-overlap area weights.
pub fn downsample_mask(
    mask: &MaskStack2D,
    height: usize,
    width: usize,
    mode: DownsampleMode,
    allow_resample: bool,
) -> Result<MaskStack2D> {
    let (h0, w0) = (mask.height, mask.width);
    if height == 0 || width == 0 || height > h0 || width > w0 {
        return Err(Error::Dimension(format!(
            "cannot downsample {h0}x{w0} to {height}x{width}"
        )));
    }
    let mut data = Vec::with_capacity(mask.views * height * width);
    match mode {
        DownsampleMode::NearestBinary => {
            for v in 0..mask.views {
                let src = mask.view(v);
                for y in 0..height {
                    let sy = ((2 * y + 1) * h0 / (2 * height)).min(h0 - 1);
                    for x in 0..width {
                        let sx = ((2 * x + 1) * w0 / (2 * width)).min(w0 - 1);
                        data.push(if src[sy * w0 + sx] >= 0.5 { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        DownsampleMode::AreaSoft if h0 % height == 0 && w0 % width == 0 => {
            let (ky, kx) = (h0 / height, w0 / width);
            let area = (ky * kx) as f64;
            for v in 0..mask.views {
                let src = mask.view(v);
                for y in 0..height {
                    for x in 0..width {
                        let mut sum = 0.0f64;
                        for sy in y * ky..(y + 1) * ky {
                            sum += src[sy * w0 + x * kx..sy * w0 + (x + 1) * kx]
                                .iter()
                                .map(|v| *v as f64)
                                .sum::<f64>();
                        }
                        data.push((sum / area) as f32);
                    }
                }
            }
        }
        DownsampleMode::AreaSoft => {
            if !allow_resample {
                return Err(Error::Dimension(format!(
                    "{h0}x{w0} is not an integer multiple of {height}x{width}; enable resampling"
                )));
            }
            let wy = overlap_weights(h0, height);
            let wx = overlap_weights(w0, width);
            for v in 0..mask.views {
                let src = mask.view(v);
                for row in &wy {
                    for col in &wx {
                        let mut sum = 0.0f64;
                        let mut total = 0.0f64;
                        for &(sy, a) in row {
                            for &(sx, b) in col {
                                sum += a * b * src[sy * w0 + sx] as f64;
                                total += a * b;
                            }
                        }
                        data.push(((sum / total) as f32).clamp(0.0, 1.0));
                    }
                }
            }
        }
    }
    MaskStack2D::new(mask.views, height, width, data)
}

/// For each output cell, the source cells it overlaps and by how much.
fn overlap_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let lo = i as f64 * scale;
            let hi = (i + 1) as f64 * scale;
            let mut cells = Vec::new();
            let mut s = lo.floor() as usize;
            while (s as f64) < hi && s < src {
                let overlap = (hi.min((s + 1) as f64) - lo.max(s as f64)).max(0.0);
                if overlap > 0.0 {
                    cells.push((s, overlap));
                }
                s += 1;
            }
            cells
        })
        .collect()
}

/// `mask · edited + (1 − mask) · original`, mask broadcast over channels.
pub fn blend_features(
    edited: &MultiViewFeature,
    original: &MultiViewFeature,
    mask: &MaskStack2D,
) -> Result<MultiViewFeature> {
    edited.check_same_shape(original)?;
    if (mask.views, mask.height, mask.width) != (edited.views, edited.height, edited.width) {
        return Err(Error::Dimension(format!(
            "mask {}x{}x{} does not match features {}x{}x{}",
            mask.views, mask.height, mask.width, edited.views, edited.height, edited.width
        )));
    }
    let c = edited.channels;
    let data = edited
        .data
        .chunks_exact(c)
        .zip(original.data.chunks_exact(c))
        .zip(&mask.data)
        .flat_map(|((e, o), m)| {
            e.iter().zip(o).map(move |(e, o)| {
                let v = m * e + (1.0 - m) * o;
                // Rounding may step one ulp outside the convex hull.
                v.clamp(e.min(*o), e.max(*o))
            })
        })
        .collect();
    MultiViewFeature::new(edited.views, edited.height, edited.width, c, data)
}

/// Overwrites masked pixels with the marker color.
pub fn paint_masks(
    images: &MultiViewFeature,
    masks: &MaskStack2D,
    color: &ColorSpec,
) -> Result<MultiViewFeature> {
    if images.channels != 3 {
        return Err(Error::Dimension(format!(
            "painting needs RGB images, got {} channels",
            images.channels
        )));
    }
    if (masks.views, masks.height, masks.width) != (images.views, images.height, images.width) {
        return Err(Error::Dimension("mask and image extents differ".into()));
    }
    if !masks.is_binary() {
        return Err(Error::Precondition(
            "painting needs binary masks; binarize at 0.5 first".into(),
        ));
    }
    color.validate()?;
    let mut out = images.clone();
    for (px, m) in out.data.chunks_exact_mut(3).zip(&masks.data) {
        if *m == 1.0 {
            px.copy_from_slice(&color.rgb);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphOp {
    Dilate,
    Erode,
}

/// `steps` rounds of 8-connected dilation or erosion on every view.
///
/// Values `>= 0.5` count as set. Erosion only looks at in-image neighbors,
/// so the image border does not eat into the mask.
pub fn morph2d(mask: &MaskStack2D, steps: usize, op: MorphOp) -> MaskStack2D {
    if steps == 0 {
        return mask.clone();
    }
    let (h, w) = (mask.height, mask.width);
    let mut data = Vec::with_capacity(mask.data.len());
    for v in 0..mask.views {
        let src: Vec<bool> = mask.view(v).iter().map(|x| *x >= 0.5).collect();
        let mut rows = vec![false; h * w];
        for y in 0..h {
            for x in 0..w {
                let lo = x.saturating_sub(steps);
                let hi = (x + steps).min(w - 1);
                let window = &src[y * w + lo..=y * w + hi];
                rows[y * w + x] = match op {
                    MorphOp::Dilate => window.iter().any(|b| *b),
                    MorphOp::Erode => window.iter().all(|b| *b),
                };
            }
        }
        for y in 0..h {
            let lo = y.saturating_sub(steps);
            let hi = (y + steps).min(h - 1);
            for x in 0..w {
                let mut column = (lo..=hi).map(|yy| rows[yy * w + x]);
                let on = match op {
                    MorphOp::Dilate => column.any(|b| b),
                    MorphOp::Erode => column.all(|b| b),
                };
                data.push(if on { 1.0 } else { 0.0 });
            }
        }
    }
    MaskStack2D {
        data,
        ..mask.clone()
    }
}

/// Signed morphology: positive dilates, negative erodes.
pub fn morph2d_signed(mask: &MaskStack2D, dilation: i64) -> MaskStack2D {
    if dilation >= 0 {
        morph2d(mask, dilation as usize, MorphOp::Dilate)
    } else {
        morph2d(mask, dilation.unsigned_abs() as usize, MorphOp::Erode)
    }
}
