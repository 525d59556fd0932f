use serde::{Deserialize, Serialize};

use super::{Mask3D, VoxelGrid};
use crate::error::{Error, Result};

/// Marker color plus the Euclidean RGB distance under which a voxel counts
/// as painted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorSpec {
    pub rgb: [f32; 3],
    pub threshold: f32,
}

impl ColorSpec {
    pub const GREEN: [f32; 3] = [0.0, 1.0, 0.0];
    pub const DEFAULT_THRESHOLD: f32 = 0.3;

    pub fn new(rgb: [f32; 3], threshold: f32) -> Result<Self> {
        let spec = Self { rgb, threshold };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rgb.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Domain(format!(
                "color components must lie in [0, 1], got {:?}",
                self.rgb
            )));
        }
        if !self.threshold.is_finite() || self.threshold < 0.0 {
            return Err(Error::Domain(format!(
                "color threshold must be finite and >= 0, got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    /// Whether `color` is within the threshold of the marker color.
    #[inline]
    pub fn matches(&self, color: &[f32]) -> bool {
        let d2: f64 = color
            .iter()
            .zip(&self.rgb)
            .map(|(c, r)| {
                let d = *c as f64 - *r as f64;
                d * d
            })
            .sum();
        d2.sqrt() <= self.threshold as f64
    }
}

impl Default for ColorSpec {
    fn default() -> Self {
        Self {
            rgb: Self::GREEN,
            threshold: Self::DEFAULT_THRESHOLD,
        }
    }
}

/// Lifts a painted color field to a 3D mask: a voxel is set when its stored
/// color lies within `spec.threshold` of `spec.rgb`.
///
/// Values are compared as stored, no gamma conversion is applied.
pub fn extract_color_mask(colors: &VoxelGrid, spec: &ColorSpec) -> Result<Mask3D> {
    if colors.channels() != 3 {
        return Err(Error::Dimension(format!(
            "color field must have 3 channels, got {}",
            colors.channels()
        )));
    }
    spec.validate()?;
    let bits = colors
        .data()
        .chunks_exact(3)
        .map(|c| spec.matches(c))
        .collect();
    Mask3D::from_bits(colors.resolution(), bits)
}
