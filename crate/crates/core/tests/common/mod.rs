//! Reference implementations shared by the integration and acceptance
//! tests. Everything here is deliberately naive and independent of the
//! library's own kernels.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxmerge_core::grid::cell_center;
use voxmerge_core::{Connectivity, Mask3D, PointCloud, VoxelGrid};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Dilation by stamping a ball around every mask voxel: Chebyshev radius
/// `d` for 26-connectivity, Manhattan radius `d` for 6.
pub fn dilate_by_distance(mask: &Mask3D, d: usize, conn: Connectivity) -> Vec<bool> {
    let a = mask.resolution() as i64;
    let r = d as i64;
    let mut out = vec![false; (a * a * a) as usize];
    for [x, y, z] in mask.iter_set() {
        for dz in -r..=r {
            for dy in -r..=r {
                for dx in -r..=r {
                    let inside = match conn {
                        Connectivity::TwentySix => true,
                        Connectivity::Six => dx.abs() + dy.abs() + dz.abs() <= r,
                    };
                    let (nx, ny, nz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                    if inside
                        && (0..a).contains(&nx)
                        && (0..a).contains(&ny)
                        && (0..a).contains(&nz)
                    {
                        out[((nz * a + ny) * a + nx) as usize] = true;
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefMode {
    CopyPaste,
    Average,
}

/// The merge written statement by statement, one voxel at a time, in f64.
#[allow(clippy::too_many_arguments)]
pub fn reference_merge(
    vi: &VoxelGrid,
    ve: &VoxelGrid,
    mi: &Mask3D,
    me: &Mask3D,
    empty: &[f32],
    d: usize,
    theta: f64,
    conn: Connectivity,
    mode: RefMode,
) -> Vec<f64> {
    let n = vi.voxel_count();
    let f = vi.channels();
    let mut v: Vec<f64> = vi.data().iter().map(|x| *x as f64).collect();
    let e: Vec<f64> = ve.data().iter().map(|x| *x as f64).collect();
    // Line 1: nullify the removed region.
    for i in 0..n {
        if mi.bits()[i] {
            for c in 0..f {
                v[i * f + c] = empty[c] as f64;
            }
        }
    }
    // Line 2: paste the added region.
    for i in 0..n {
        if me.bits()[i] {
            for c in 0..f {
                v[i * f + c] = e[i * f + c];
            }
        }
    }
    if mode == RefMode::CopyPaste {
        return v;
    }
    // Lines 3-4: the shell.
    let dilated = dilate_by_distance(me, d, conn);
    let shell: Vec<bool> = (0..n).map(|i| dilated[i] != me.bits()[i]).collect();
    // Lines 5-6: blend inside the shell from the post-paste state.
    let mut blend = v.clone();
    for i in 0..n {
        if shell[i] {
            for c in 0..f {
                blend[i * f + c] = theta * v[i * f + c] + (1.0 - theta) * e[i * f + c];
            }
        }
    }
    blend
}

pub fn random_mask(rng: &mut ChaCha8Rng, a: usize, density: f64) -> Mask3D {
    Mask3D::from_bits(
        a,
        (0..a * a * a).map(|_| rng.random_bool(density)).collect(),
    )
    .unwrap()
}

pub fn random_grid(rng: &mut ChaCha8Rng, a: usize, f: usize) -> VoxelGrid {
    VoxelGrid::from_data(
        a,
        f,
        (0..a * a * a * f)
            .map(|_| rng.random_range(-2.0f32..2.0))
            .collect(),
    )
    .unwrap()
}

/// Analytic sphere SDF on an `A³` single-channel grid.
pub fn sphere_sdf_grid(a: usize, radius: f64) -> VoxelGrid {
    VoxelGrid::from_fn(a, 1, |[x, y, z], o| {
        let p = [cell_center(x, a), cell_center(y, a), cell_center(z, a)];
        o[0] = ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - radius) as f32;
    })
    .unwrap()
}

/// Uniform points on a sphere of radius `r`: uniform height and angle
/// (Archimedes' hat-box theorem).
pub fn sphere_points(n: usize, r: f64, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointCloud::new(
        (0..n)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..1.0);
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let s = (1.0 - z * z).sqrt();
                [
                    (r * s * phi.cos()) as f32,
                    (r * s * phi.sin()) as f32,
                    (r * z) as f32,
                ]
            })
            .collect(),
    )
}

/// O(|a|·|b|) chamfer distance.
pub fn brute_chamfer(a: &PointCloud, b: &PointCloud) -> f64 {
    let one_way = |from: &PointCloud, to: &PointCloud| {
        from.positions
            .iter()
            .map(|p| {
                to.positions
                    .iter()
                    .map(|q| {
                        (0..3)
                            .map(|k| (p[k] as f64 - q[k] as f64).powi(2))
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / from.len() as f64
    };
    one_way(a, b) + one_way(b, a)
}

/// Largest L∞ feature difference over 6-adjacent voxel pairs with at least
/// one voxel in `region`.
pub fn max_jump(grid: &VoxelGrid, region: &Mask3D) -> f64 {
    let a = grid.resolution();
    let mut worst = 0.0f64;
    for z in 0..a {
        for y in 0..a {
            for x in 0..a {
                for (dx, dy, dz) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
                    let (nx, ny, nz) = (x + dx, y + dy, z + dz);
                    if nx >= a || ny >= a || nz >= a {
                        continue;
                    }
                    if !region.get(x, y, z) && !region.get(nx, ny, nz) {
                        continue;
                    }
                    let jump = grid
                        .voxel(x, y, z)
                        .iter()
                        .zip(grid.voxel(nx, ny, nz))
                        .map(|(p, q)| (*p as f64 - *q as f64).abs())
                        .fold(0.0, f64::max);
                    worst = worst.max(jump);
                }
            }
        }
    }
    worst
}
