use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{cell_center, cell_coordinate, VoxelGrid};
use crate::error::{Error, Result};

/// How the three plane samples combine into one voxel feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// `[xy, xz, yz]`, 3F′ channels.
    #[default]
    Concat,
    Sum,
    Mean,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concat" => Ok(Aggregation::Concat),
            "sum" => Ok(Aggregation::Sum),
            "mean" => Ok(Aggregation::Mean),
            other => Err(Error::Domain(format!(
                "aggregation must be concat, sum or mean, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Concat => "concat",
            Aggregation::Sum => "sum",
            Aggregation::Mean => "mean",
        })
    }
}

/// Three axis-aligned `R×R×F′` feature planes.
///
/// Plane texel `(u, v)` sits at the same cell centers as voxels do, and is
/// stored at `(v * R + u) * F′`. The XY plane is indexed by `(x, y)`, XZ by
/// `(x, z)` and YZ by `(y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriplaneSet {
    resolution: usize,
    channels: usize,
    planes: [Vec<f32>; 3],
    pub aggregation: Aggregation,
}

impl TriplaneSet {
    pub fn new(
        resolution: usize,
        channels: usize,
        xy: Vec<f32>,
        xz: Vec<f32>,
        yz: Vec<f32>,
        aggregation: Aggregation,
    ) -> Result<Self> {
        if resolution == 0 || channels == 0 {
            return Err(Error::Dimension(
                "triplane resolution and channels must be >= 1".into(),
            ));
        }
        let len = resolution * resolution * channels;
        for (name, plane) in [("xy", &xy), ("xz", &xz), ("yz", &yz)] {
            if plane.len() != len {
                return Err(Error::Dimension(format!(
                    "{name} plane has {} values, expected {resolution}x{resolution}x{channels}",
                    plane.len()
                )));
            }
            super::check_finite(plane)?;
        }
        Ok(Self {
            resolution,
            channels,
            planes: [xy, xz, yz],
            aggregation,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn plane_channels(&self) -> usize {
        self.channels
    }

    pub fn planes(&self) -> &[Vec<f32>; 3] {
        &self.planes
    }

    /// Channel count after aggregation.
    pub fn output_channels(&self) -> usize {
        match self.aggregation {
            Aggregation::Concat => 3 * self.channels,
            Aggregation::Sum | Aggregation::Mean => self.channels,
        }
    }

    /// Aggregated feature at a point of `[-1, 1]³`.
    pub fn sample(&self, p: [f64; 3], out: &mut [f32]) {
        let f = self.channels;
        let mut xy = vec![0.0f64; f];
        let mut xz = vec![0.0f64; f];
        let mut yz = vec![0.0f64; f];
        self.bilinear(0, p[0], p[1], &mut xy);
        self.bilinear(1, p[0], p[2], &mut xz);
        self.bilinear(2, p[1], p[2], &mut yz);
        match self.aggregation {
            Aggregation::Concat => {
                for c in 0..f {
                    out[c] = xy[c] as f32;
                    out[f + c] = xz[c] as f32;
                    out[2 * f + c] = yz[c] as f32;
                }
            }
            Aggregation::Sum => {
                for c in 0..f {
                    out[c] = (xy[c] + xz[c] + yz[c]) as f32;
                }
            }
            Aggregation::Mean => {
                for c in 0..f {
                    out[c] = ((xy[c] + xz[c] + yz[c]) / 3.0) as f32;
                }
            }
        }
    }

    fn bilinear(&self, plane: usize, u: f64, v: f64, out: &mut [f64]) {
        let r = self.resolution;
        let f = self.channels;
        let data = &self.planes[plane];
        let (u0, u1, tu) = texel_span(u, r);
        let (v0, v1, tv) = texel_span(v, r);
        let texel = |iu: usize, iv: usize| &data[(iv * r + iu) * f..(iv * r + iu + 1) * f];
        let (a, b, c, d) = (texel(u0, v0), texel(u1, v0), texel(u0, v1), texel(u1, v1));
        for k in 0..f {
            let bottom = a[k] as f64 * (1.0 - tu) + b[k] as f64 * tu;
            let top = c[k] as f64 * (1.0 - tu) + d[k] as f64 * tu;
            out[k] = bottom * (1.0 - tv) + top * tv;
        }
    }
}

fn texel_span(p: f64, r: usize) -> (usize, usize, f64) {
    let s = cell_coordinate(p, r).clamp(0.0, (r - 1) as f64);
    let i0 = (s.floor() as usize).min(r - 1);
    (i0, (i0 + 1).min(r - 1), s - i0 as f64)
}

/// Resamples a triplane onto an `A³` voxel grid at voxel centers.
pub fn sample_triplane(tp: &TriplaneSet, resolution: usize) -> Result<VoxelGrid> {
    if resolution == 0 {
        return Err(Error::Domain("voxel resolution must be >= 1".into()));
    }
    VoxelGrid::from_fn(resolution, tp.output_channels(), |[x, y, z], out| {
        let p = [
            cell_center(x, resolution),
            cell_center(y, resolution),
            cell_center(z, resolution),
        ];
        tp.sample(p, out);
    })
}
