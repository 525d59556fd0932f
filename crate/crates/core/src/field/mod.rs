//! From feature volumes to surfaces: decoding, isosurface extraction,
//! coloring, surface sampling and chamfer distance.

mod chamfer;
mod decode;
mod kdtree;
mod marching_cubes;
mod sampling;
mod tables;

pub use chamfer::{chamfer, nearest_squared_distances};
pub use decode::{decode_fields, ChannelDecoder, FieldDecoder, FnDecoder};
pub use kdtree::KdTree;
pub use marching_cubes::marching_cubes;
pub use sampling::{color_mesh, sample_surface};

use crate::error::{Error, Result};

/// Triangle mesh in `[-1, 1]³` with optional per-vertex colors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TexturedMesh {
    pub positions: Vec<[f32; 3]>,
    /// Same length as `positions` when present, components in `[0, 1]`.
    pub colors: Option<Vec<[f32; 3]>>,
    pub triangles: Vec<[u32; 3]>,
}

impl TexturedMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if let Some(colors) = &self.colors {
            if colors.len() != n {
                return Err(Error::Dimension(format!(
                    "{} colors for {n} vertices",
                    colors.len()
                )));
            }
        }
        if let Some(t) = self
            .triangles
            .iter()
            .find(|t| t.iter().any(|i| *i as usize >= n))
        {
            return Err(Error::Data(format!(
                "triangle {t:?} indexes past {n} vertices"
            )));
        }
        if self.positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Data("non-finite vertex coordinate".into()));
        }
        Ok(())
    }

    /// Area of triangle `t` in f64.
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| to_f64(self.positions[i as usize]));
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    /// Signed enclosed volume; positive for outward-facing triangles.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| to_f64(self.positions[i as usize]));
                dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }
}

/// Point samples with optional colors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub positions: Vec<[f32; 3]>,
    pub colors: Option<Vec<[f32; 3]>>,
}

impl PointCloud {
    pub fn new(positions: Vec<[f32; 3]>) -> Self {
        Self {
            positions,
            colors: None,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

#[inline]
pub(crate) fn to_f64(p: [f32; 3]) -> [f64; 3] {
    [p[0] as f64, p[1] as f64, p[2] as f64]
}

#[inline]
pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}
