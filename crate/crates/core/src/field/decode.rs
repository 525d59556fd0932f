use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::VoxelGrid;

/// Maps one feature vector to an SDF value and an RGB color.
pub trait FieldDecoder: Sync {
    /// Whether features of `channels` scalars can be decoded.
    fn accepts(&self, channels: usize) -> bool;

    /// Decodes `feature`; the color is clamped by the caller.
    fn decode(&self, feature: &[f32]) -> (f32, [f32; 3]);
}

/// Reads the SDF from channel 0 and RGB from channels 1..=3.
///
/// Accepts any grid with at least four channels; extra channels are ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChannelDecoder;

impl ChannelDecoder {
    pub const MIN_CHANNELS: usize = 4;
}

impl FieldDecoder for ChannelDecoder {
    fn accepts(&self, channels: usize) -> bool {
        channels >= Self::MIN_CHANNELS
    }

    fn decode(&self, feature: &[f32]) -> (f32, [f32; 3]) {
        (feature[0], [feature[1], feature[2], feature[3]])
    }
}

/// Wraps a closure as a decoder of fixed arity.
pub struct FnDecoder<F> {
    channels: usize,
    f: F,
}

impl<F> FnDecoder<F>
where
    F: Fn(&[f32]) -> (f32, [f32; 3]) + Sync,
{
    pub fn new(channels: usize, f: F) -> Self {
        Self { channels, f }
    }
}

impl<F> FieldDecoder for FnDecoder<F>
where
    F: Fn(&[f32]) -> (f32, [f32; 3]) + Sync,
{
    fn accepts(&self, channels: usize) -> bool {
        channels == self.channels
    }

    fn decode(&self, feature: &[f32]) -> (f32, [f32; 3]) {
        (self.f)(feature)
    }
}

/// Applies `decoder` to every voxel, returning `(sdf, rgb)` grids.
pub fn decode_fields<D: FieldDecoder + ?Sized>(
    grid: &VoxelGrid,
    decoder: &D,
) -> Result<(VoxelGrid, VoxelGrid)> {
    if !decoder.accepts(grid.channels()) {
        return Err(Error::Dimension(format!(
            "decoder does not accept {}-channel features",
            grid.channels()
        )));
    }
    let a = grid.resolution();
    let f = grid.channels();
    let n = grid.voxel_count();
    let mut sdf = vec![0.0f32; n];
    let mut rgb = vec![0.0f32; 3 * n];
    let chunk = a * a;
    sdf.par_chunks_mut(chunk)
        .zip(rgb.par_chunks_mut(3 * chunk))
        .zip(grid.data().par_chunks(chunk * f))
        .for_each(|((s, c), features)| {
            for (k, feature) in features.chunks_exact(f).enumerate() {
                let (d, col) = decoder.decode(feature);
                s[k] = d;
                for j in 0..3 {
                    // NaN stays NaN and is rejected below.
                    c[3 * k + j] = if col[j].is_nan() {
                        col[j]
                    } else {
                        col[j].clamp(0.0, 1.0)
                    };
                }
            }
        });
    let sdf = VoxelGrid::from_data(a, 1, sdf)
        .map_err(|_| Error::Data("decoder produced a non-finite SDF value".into()))?;
    let rgb = VoxelGrid::from_data(a, 3, rgb)
        .map_err(|_| Error::Data("decoder produced a non-finite color".into()))?;
    Ok((sdf, rgb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::cell_center;

    #[test]
    fn channel_layout_is_a_projection() {
        let g = VoxelGrid::from_fn(8, 5, |[x, y, z], o| {
            let p = [cell_center(x, 8), cell_center(y, 8), cell_center(z, 8)];
            o[0] = ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 0.5) as f32;
            o[1] = 0.0;
            o[2] = 1.0;
            o[3] = 0.0;
            o[4] = 7.0;
        })
        .unwrap();
        let (sdf, rgb) = decode_fields(&g, &ChannelDecoder).unwrap();
        for i in 0..g.voxel_count() {
            assert_eq!(sdf.data()[i].to_bits(), g.voxel_at(i)[0].to_bits());
            assert_eq!(rgb.voxel_at(i), &[0.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn channel_decoder_arity() {
        let g = VoxelGrid::zeros(2, 3).unwrap();
        assert!(matches!(
            decode_fields(&g, &ChannelDecoder),
            Err(Error::Dimension(_))
        ));
        let two = FnDecoder::new(2, |_: &[f32]| (0.0, [0.0; 3]));
        assert!(matches!(decode_fields(&g, &two), Err(Error::Dimension(_))));
    }

    #[test]
    fn custom_decoder_on_coordinate_grid() {
        let a = 9;
        let coords = VoxelGrid::from_fn(a, 3, |[x, y, z], o| {
            o[0] = cell_center(x, a) as f32;
            o[1] = cell_center(y, a) as f32;
            o[2] = cell_center(z, a) as f32;
        })
        .unwrap();
        let dec = FnDecoder::new(3, |v: &[f32]| {
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            (r - 0.5, [1.0, 0.0, 0.0])
        });
        let (sdf, rgb) = decode_fields(&coords, &dec).unwrap();
        for z in 0..a {
            for y in 0..a {
                for x in 0..a {
                    let p = [cell_center(x, a), cell_center(y, a), cell_center(z, a)];
                    let expect = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 0.5;
                    assert!((sdf.voxel(x, y, z)[0] as f64 - expect).abs() < 1e-6);
                }
            }
        }
        assert!(rgb.data().chunks(3).all(|c| c == [1.0, 0.0, 0.0]));
    }

    #[test]
    fn colors_clamped_and_nan_rejected() {
        let g = VoxelGrid::zeros(2, 1).unwrap();
        let dec = FnDecoder::new(1, |_: &[f32]| (0.0, [-1.0, 2.0, 0.5]));
        let (_, rgb) = decode_fields(&g, &dec).unwrap();
        assert!(rgb.data().chunks(3).all(|c| c == [0.0, 1.0, 0.5]));
        let bad = FnDecoder::new(1, |_: &[f32]| (f32::NAN, [0.0; 3]));
        assert!(matches!(decode_fields(&g, &bad), Err(Error::Data(_))));
    }
}
