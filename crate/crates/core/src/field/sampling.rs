use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{to_f64, PointCloud, TexturedMesh};
use crate::error::{Error, Result};
use crate::grid::VoxelGrid;

/// Colors every vertex by trilinear sampling of a 3-channel color field.
/// Vertices beyond the outermost voxel centers take the edge value.
pub fn color_mesh(mesh: &TexturedMesh, rgb: &VoxelGrid) -> Result<TexturedMesh> {
    if rgb.channels() != 3 {
        return Err(Error::Dimension(format!(
            "color field must have 3 channels, got {}",
            rgb.channels()
        )));
    }
    mesh.validate()?;
    let colors = mesh
        .positions
        .iter()
        .map(|p| {
            let mut c = [0f32; 3];
            rgb.sample_trilinear(to_f64(*p), &mut c);
            c.map(|v| v.clamp(0.0, 1.0))
        })
        .collect();
    Ok(TexturedMesh {
        positions: mesh.positions.clone(),
        colors: Some(colors),
        triangles: mesh.triangles.clone(),
    })
}

/// Draws `n` points uniformly over the mesh surface.
///
/// Triangles are picked with probability proportional to area and points
/// placed with uniform barycentric coordinates. The stream is a ChaCha8
/// generator seeded with `seed`, so equal inputs give equal clouds.
pub fn sample_surface(mesh: &TexturedMesh, n: usize, seed: u64) -> Result<PointCloud> {
    if mesh.is_empty() {
        return Err(Error::Precondition("cannot sample an empty mesh".into()));
    }
    if n == 0 {
        return Err(Error::Precondition("sample count must be >= 1".into()));
    }
    mesh.validate()?;
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0f64;
    for t in 0..mesh.triangles.len() {
        total += mesh.triangle_area(t);
        cumulative.push(total);
    }
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Precondition("mesh has zero surface area".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(n);
    let mut colors = mesh.colors.as_ref().map(|_| Vec::with_capacity(n));
    for _ in 0..n {
        let target = rng.random::<f64>() * total;
        let t = cumulative
            .partition_point(|c| *c <= target)
            .min(cumulative.len() - 1);
        let r1: f64 = rng.random();
        let r2: f64 = rng.random();
        let s = r1.sqrt();
        let w = [1.0 - s, s * (1.0 - r2), s * r2];
        let idx = mesh.triangles[t].map(|i| i as usize);
        positions.push(blend(idx.map(|i| mesh.positions[i]), w));
        if let (Some(out), Some(src)) = (colors.as_mut(), mesh.colors.as_ref()) {
            out.push(blend(idx.map(|i| src[i]), w));
        }
    }
    Ok(PointCloud { positions, colors })
}

fn blend(v: [[f32; 3]; 3], w: [f64; 3]) -> [f32; 3] {
    let mut out = [0f32; 3];
    for k in 0..3 {
        out[k] = (w[0] * v[0][k] as f64 + w[1] * v[1][k] as f64 + w[2] * v[2][k] as f64) as f32;
    }
    out
}
