//! Dense cubic volumes and the per-voxel operations on them.
//!
//! Voxel `(ix, iy, iz)` of an `A`-resolution volume covers the cell centered
//! at `-1 + (2i + 1) / A` along each axis, so the whole volume spans
//! `[-1, 1]³`. Storage is channel-fastest, then x, then y, then z.

mod color;
mod morphology;
mod triplane;

pub use color::{extract_color_mask, ColorSpec};
pub use morphology::{dilate3d, mask_xor, Connectivity};
pub use triplane::{sample_triplane, Aggregation, TriplaneSet};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Center of cell `index` along one axis of a `resolution`-cell grid.
#[inline]
pub fn cell_center(index: usize, resolution: usize) -> f64 {
    -1.0 + (2 * index + 1) as f64 / resolution as f64
}

/// Continuous cell coordinate of `p` (inverse of [`cell_center`]).
#[inline]
pub fn cell_coordinate(p: f64, resolution: usize) -> f64 {
    ((p + 1.0) * resolution as f64 - 1.0) * 0.5
}

/// Dense `A×A×A×F` feature volume.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    resolution: usize,
    channels: usize,
    data: Vec<f32>,
}

impl VoxelGrid {
    /// Zero-filled grid.
    pub fn zeros(resolution: usize, channels: usize) -> Result<Self> {
        let len = payload_len(resolution, channels)?;
        Ok(Self {
            resolution,
            channels,
            data: vec![0.0; len],
        })
    }

    /// Grid with every voxel set to `feature`.
    pub fn filled(resolution: usize, feature: &[f32]) -> Result<Self> {
        let len = payload_len(resolution, feature.len())?;
        check_finite(feature)?;
        let data = feature.iter().copied().cycle().take(len).collect();
        Ok(Self {
            resolution,
            channels: feature.len(),
            data,
        })
    }

    /// Wraps an existing buffer; rejects wrong lengths and non-finite values.
    pub fn from_data(resolution: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        let len = payload_len(resolution, channels)?;
        if data.len() != len {
            return Err(Error::Dimension(format!(
                "grid {resolution}^3 x {channels} needs {len} values, got {}",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self {
            resolution,
            channels,
            data,
        })
    }

    /// Builds a grid by evaluating `f(voxel, out)` for every voxel.
    ///
    /// `f` must write finite values; z-slabs are filled in parallel.
    pub fn from_fn<F>(resolution: usize, channels: usize, f: F) -> Result<Self>
    where
        F: Fn([usize; 3], &mut [f32]) + Sync,
    {
        let mut grid = Self::zeros(resolution, channels)?;
        let slab = resolution * resolution * channels;
        grid.data
            .par_chunks_mut(slab)
            .enumerate()
            .for_each(|(z, slab)| {
                for (i, voxel) in slab.chunks_mut(channels).enumerate() {
                    f([i % resolution, i / resolution, z], voxel);
                }
            });
        check_finite(&grid.data)?;
        Ok(grid)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn voxel_count(&self) -> usize {
        self.resolution * self.resolution * self.resolution
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Mutable access to the raw payload. Callers keep values finite.
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Linear voxel index of `(x, y, z)`.
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.resolution + y) * self.resolution + x
    }

    #[inline]
    pub fn voxel(&self, x: usize, y: usize, z: usize) -> &[f32] {
        self.voxel_at(self.index(x, y, z))
    }

    #[inline]
    pub fn voxel_mut(&mut self, x: usize, y: usize, z: usize) -> &mut [f32] {
        let i = self.index(x, y, z);
        self.voxel_at_mut(i)
    }

    #[inline]
    pub fn voxel_at(&self, linear: usize) -> &[f32] {
        &self.data[linear * self.channels..(linear + 1) * self.channels]
    }

    #[inline]
    pub fn voxel_at_mut(&mut self, linear: usize) -> &mut [f32] {
        &mut self.data[linear * self.channels..(linear + 1) * self.channels]
    }

    /// Number of scalars in one z-slab.
    pub fn slab_len(&self) -> usize {
        self.resolution * self.resolution * self.channels
    }

    /// Errors unless `other` has the same resolution and channel count.
    pub fn check_same_shape(&self, other: &VoxelGrid) -> Result<()> {
        if self.resolution != other.resolution || self.channels != other.channels {
            return Err(Error::Dimension(format!(
                "grid shapes differ: {}^3 x {} vs {}^3 x {}",
                self.resolution, self.channels, other.resolution, other.channels
            )));
        }
        Ok(())
    }

    /// Samples the grid at a point of `[-1, 1]³` with trilinear interpolation
    /// between voxel centers; points beyond the outermost centers clamp.
    pub fn sample_trilinear(&self, p: [f64; 3], out: &mut [f32]) {
        let a = self.resolution;
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut t = [0f64; 3];
        for k in 0..3 {
            let s = cell_coordinate(p[k], a).clamp(0.0, (a - 1) as f64);
            let i0 = (s.floor() as usize).min(a - 1);
            lo[k] = i0;
            hi[k] = (i0 + 1).min(a - 1);
            t[k] = s - i0 as f64;
        }
        for (c, o) in out.iter_mut().enumerate().take(self.channels) {
            let mut acc = 0.0f64;
            for corner in 0..8 {
                let (x, wx) = pick(corner & 1, lo[0], hi[0], t[0]);
                let (y, wy) = pick((corner >> 1) & 1, lo[1], hi[1], t[1]);
                let (z, wz) = pick((corner >> 2) & 1, lo[2], hi[2], t[2]);
                let w = wx * wy * wz;
                if w != 0.0 {
                    acc += w * self.voxel(x, y, z)[c] as f64;
                }
            }
            *o = acc as f32;
        }
    }
}

#[inline]
fn pick(bit: usize, lo: usize, hi: usize, t: f64) -> (usize, f64) {
    if bit == 0 {
        (lo, 1.0 - t)
    } else {
        (hi, t)
    }
}

pub(crate) fn payload_len(resolution: usize, channels: usize) -> Result<usize> {
    if resolution == 0 || channels == 0 {
        return Err(Error::Dimension(format!(
            "resolution and channels must be >= 1 (got {resolution}, {channels})"
        )));
    }
    resolution
        .checked_mul(resolution)
        .and_then(|v| v.checked_mul(resolution))
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| Error::Dimension(format!("grid {resolution}^3 x {channels} overflows")))
}

pub(crate) fn check_finite(values: &[f32]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Data(format!("non-finite value at index {i}"))),
        None => Ok(()),
    }
}

/// Boolean `A×A×A` volume sharing the voxel layout of [`VoxelGrid`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask3D {
    resolution: usize,
    bits: Vec<bool>,
}

impl Mask3D {
    pub fn empty(resolution: usize) -> Self {
        let n = resolution.pow(3);
        Self {
            resolution,
            bits: vec![false; n],
        }
    }

    pub fn full(resolution: usize) -> Self {
        let n = resolution.pow(3);
        Self {
            resolution,
            bits: vec![true; n],
        }
    }

    pub fn from_bits(resolution: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != resolution.pow(3) {
            return Err(Error::Dimension(format!(
                "mask {resolution}^3 needs {} bits, got {}",
                resolution.pow(3),
                bits.len()
            )));
        }
        Ok(Self { resolution, bits })
    }

    pub fn from_fn(resolution: usize, f: impl Fn([usize; 3]) -> bool) -> Self {
        let mut bits = Vec::with_capacity(resolution.pow(3));
        for z in 0..resolution {
            for y in 0..resolution {
                for x in 0..resolution {
                    bits.push(f([x, y, z]));
                }
            }
        }
        Self { resolution, bits }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.resolution + y) * self.resolution + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[self.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        let i = self.index(x, y, z);
        self.bits[i] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    /// Errors unless the mask matches a volume of `resolution`.
    pub fn check_resolution(&self, resolution: usize) -> Result<()> {
        if self.resolution != resolution {
            return Err(Error::Dimension(format!(
                "mask resolution {} does not match {resolution}",
                self.resolution
            )));
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &Mask3D) -> bool {
        self.resolution == other.resolution
            && self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    pub fn intersects(&self, other: &Mask3D) -> bool {
        self.bits.iter().zip(&other.bits).any(|(a, b)| *a && *b)
    }

    pub fn union(&self, other: &Mask3D) -> Result<Mask3D> {
        other.check_resolution(self.resolution)?;
        Ok(Self {
            resolution: self.resolution,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| *a || *b)
                .collect(),
        })
    }

    /// Voxel coordinates of every set voxel in storage order.
    pub fn iter_set(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let a = self.resolution;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| [i % a, (i / a) % a, i / (a * a)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_centers_span_unit_cube() {
        assert_eq!(cell_center(0, 2), -0.5);
        assert_eq!(cell_center(1, 2), 0.5);
        assert_eq!(cell_center(0, 1), 0.0);
        for i in 0..7 {
            assert!((cell_coordinate(cell_center(i, 7), 7) - i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn from_data_checks_length_and_finiteness() {
        assert!(matches!(
            VoxelGrid::from_data(2, 1, vec![0.0; 7]),
            Err(Error::Dimension(_))
        ));
        let mut data = vec![0.0; 8];
        data[3] = f32::NAN;
        assert!(matches!(
            VoxelGrid::from_data(2, 1, data),
            Err(Error::Data(_))
        ));
        assert!(matches!(VoxelGrid::zeros(0, 1), Err(Error::Dimension(_))));
        assert!(matches!(VoxelGrid::zeros(2, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn layout_is_channel_then_x_then_y_then_z() {
        let g = VoxelGrid::from_fn(3, 2, |[x, y, z], out| {
            out[0] = (x + 10 * y + 100 * z) as f32;
            out[1] = -out[0];
        })
        .unwrap();
        assert_eq!(g.data()[0..4], [0.0, -0.0, 1.0, -1.0]);
        let i = g.index(2, 1, 2);
        assert_eq!(g.data()[i * 2], 212.0);
        assert_eq!(g.voxel(1, 2, 0), &[21.0, -21.0]);
    }

    #[test]
    fn trilinear_reproduces_linear_field_and_clamps() {
        let g = VoxelGrid::from_fn(6, 1, |[x, y, z], out| {
            out[0] = (cell_center(x, 6) + 2.0 * cell_center(y, 6) - cell_center(z, 6)) as f32;
        })
        .unwrap();
        let mut out = [0.0f32];
        g.sample_trilinear([0.1, -0.3, 0.25], &mut out);
        assert!((out[0] as f64 - (0.1 - 0.6 - 0.25)).abs() < 1e-6);
        // Beyond the last center the value clamps to the edge voxel.
        g.sample_trilinear([1.0, 1.0, 1.0], &mut out);
        assert_eq!(out[0], g.voxel(5, 5, 5)[0]);
    }

    #[test]
    fn mask_set_ops() {
        let a = Mask3D::from_fn(3, |[x, _, _]| x == 0);
        let b = Mask3D::from_fn(3, |[x, _, _]| x <= 1);
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert_eq!(a.count(), 9);
        assert_eq!(a.union(&b).unwrap(), b);
        assert_eq!(a.iter_set().next(), Some([0, 0, 0]));
        assert!(a.check_resolution(4).is_err());
    }
}
