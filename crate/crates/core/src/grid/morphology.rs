use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Mask3D;
use crate::error::{Error, Result};

/// Structuring element of one dilation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Connectivity {
    /// Face neighbors (3D cross).
    #[serde(rename = "6")]
    Six,
    /// Full 3×3×3 cube.
    #[default]
    #[serde(rename = "26")]
    TwentySix,
}

impl FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "6" => Ok(Connectivity::Six),
            "26" => Ok(Connectivity::TwentySix),
            other => Err(Error::Domain(format!(
                "connectivity must be 6 or 26, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Connectivity::Six => f.write_str("6"),
            Connectivity::TwentySix => f.write_str("26"),
        }
    }
}

const FAR: u32 = u32::MAX / 2;

/// `steps` applications of binary dilation with the given structuring element.
///
/// Repeated cube dilation equals one Chebyshev ball of radius `steps` and
/// repeated cross dilation equals one Manhattan ball, so both are computed
/// with per-axis distance sweeps in O(A³) independent of `steps`.
pub fn dilate3d(mask: &Mask3D, steps: usize, connectivity: Connectivity) -> Mask3D {
    if steps == 0 || mask.is_empty() {
        return mask.clone();
    }
    let a = mask.resolution();
    let radius = u32::try_from(steps).unwrap_or(FAR).min(FAR);
    let mut dist: Vec<u32> = mask
        .bits()
        .iter()
        .map(|b| if *b { 0 } else { FAR })
        .collect();
    match connectivity {
        Connectivity::TwentySix => {
            for axis in 0..3 {
                sweep_axis(&mut dist, a, axis);
                for d in dist.iter_mut() {
                    *d = if *d <= radius { 0 } else { FAR };
                }
            }
        }
        Connectivity::Six => {
            for axis in 0..3 {
                sweep_axis(&mut dist, a, axis);
            }
        }
    }
    let bits = dist.into_iter().map(|d| d <= radius).collect();
    Mask3D::from_bits(a, bits).expect("dilation preserves resolution")
}

/// Forward and backward `d = min(d, neighbor + 1)` passes along one axis.
fn sweep_axis(dist: &mut [u32], a: usize, axis: usize) {
    let stride = match axis {
        0 => 1,
        1 => a,
        _ => a * a,
    };
    match axis {
        // x runs are contiguous.
        0 => {
            for line in dist.chunks_mut(a) {
                for i in 1..a {
                    line[i] = line[i].min(line[i - 1] + 1);
                }
                for i in (0..a - 1).rev() {
                    line[i] = line[i].min(line[i + 1] + 1);
                }
            }
        }
        // y and z: relax whole rows/slabs against their predecessor so the
        // inner loop stays contiguous.
        _ => {
            let block = stride;
            let outer = dist.len() / (block * a);
            for o in 0..outer {
                let base = o * block * a;
                for i in 1..a {
                    let (prev, cur) =
                        dist[base + (i - 1) * block..base + (i + 1) * block].split_at_mut(block);
                    for (c, p) in cur.iter_mut().zip(prev.iter()) {
                        *c = (*c).min(p + 1);
                    }
                }
                for i in (0..a - 1).rev() {
                    let (cur, next) =
                        dist[base + i * block..base + (i + 2) * block].split_at_mut(block);
                    for (c, n) in cur.iter_mut().zip(next.iter()) {
                        *c = (*c).min(n + 1);
                    }
                }
            }
        }
    }
}

/// Per-voxel exclusive or.
pub fn mask_xor(a: &Mask3D, b: &Mask3D) -> Result<Mask3D> {
    b.check_resolution(a.resolution())?;
    let bits = a.bits().iter().zip(b.bits()).map(|(x, y)| x ^ y).collect();
    Mask3D::from_bits(a.resolution(), bits)
}
