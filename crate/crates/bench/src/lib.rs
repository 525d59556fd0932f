//! Inputs shared by the benchmarks.

use voxmerge_core::synth::{make_edit_pair, sphere_to_cylinder_scenes, EditPair, DEFAULT_SEED};
use voxmerge_core::{grid::cell_center, PointCloud, VoxelGrid};

/// Sphere-to-cylinder edit pair with the box corrupted.
pub fn edit_pair(resolution: usize, channels: usize) -> EditPair {
    let (a, b) = sphere_to_cylinder_scenes();
    make_edit_pair(&a, &b, Some("box"), resolution, channels, DEFAULT_SEED)
        .expect("preset scenes are valid")
}

/// Single-channel SDF of a radius-0.5 sphere.
pub fn sphere_sdf(resolution: usize) -> VoxelGrid {
    VoxelGrid::from_fn(resolution, 1, |[x, y, z], out| {
        let p = [x, y, z].map(|i| cell_center(i, resolution));
        out[0] = ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 0.5) as f32;
    })
    .expect("resolution is positive")
}

/// Deterministic points on a Fibonacci lattice over a sphere of radius `r`.
pub fn fibonacci_sphere(n: usize, r: f64) -> PointCloud {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    PointCloud::new(
        (0..n)
            .map(|i| {
                let z = 1.0 - (2 * i + 1) as f64 / n as f64;
                let s = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                [
                    (r * s * phi.cos()) as f32,
                    (r * s * phi.sin()) as f32,
                    (r * z) as f32,
                ]
            })
            .collect(),
    )
}
