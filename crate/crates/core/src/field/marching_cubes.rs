use std::collections::HashMap;

use rayon::prelude::*;

use super::tables::{EDGE_TABLE, TRI_TABLE};
use super::{cross, sub, to_f64, TexturedMesh};
use crate::error::{Error, Result};
use crate::grid::{cell_center, VoxelGrid};

/// Corner offsets in table order.
const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Cube edge -> (offset of its lower endpoint, axis).
const EDGES: [([usize; 3], usize); 12] = [
    ([0, 0, 0], 0),
    ([1, 0, 0], 1),
    ([0, 1, 0], 0),
    ([0, 0, 0], 1),
    ([0, 0, 1], 0),
    ([1, 0, 1], 1),
    ([0, 1, 1], 0),
    ([0, 0, 1], 1),
    ([0, 0, 0], 2),
    ([1, 0, 0], 2),
    ([1, 1, 0], 2),
    ([0, 1, 0], 2),
];

/// Extracts the `iso` level set of a scalar grid sampled at voxel centers.
///
/// Corners strictly below `iso` count as inside. Vertices are placed by
/// linear interpolation along grid edges and shared between neighboring
/// cells; triangles face towards increasing field values. Cells are emitted
/// in x-fastest order and vertex ids follow first use, so the output does not
/// depend on the thread schedule. Zero-area triangles are dropped.
pub fn marching_cubes(sdf: &VoxelGrid, iso: f32) -> Result<TexturedMesh> {
    if sdf.channels() != 1 {
        return Err(Error::Dimension(format!(
            "marching cubes needs a 1-channel field, got {}",
            sdf.channels()
        )));
    }
    let a = sdf.resolution();
    if a < 2 {
        return Err(Error::Precondition(format!(
            "marching cubes needs resolution >= 2, got {a}"
        )));
    }
    if !iso.is_finite() {
        return Err(Error::Domain(format!(
            "iso level must be finite, got {iso}"
        )));
    }
    if let Some(i) = sdf.data().iter().position(|v| v.is_nan()) {
        return Err(Error::Data(format!("NaN in scalar field at voxel {i}")));
    }

    let values = sdf.data();
    let layers: Vec<Vec<[u64; 3]>> = (0..a - 1)
        .into_par_iter()
        .map(|z| polygonize_layer(values, a, z, iso))
        .collect();

    let mut mesh = TexturedMesh::default();
    let mut ids: HashMap<u64, u32> = HashMap::new();
    for tri in layers.into_iter().flatten() {
        let corners = tri.map(|edge| edge_vertex(values, a, iso, edge));
        let [p0, p1, p2] = corners.map(to_f64);
        let n = cross(sub(p1, p0), sub(p2, p0));
        if n == [0.0; 3] {
            continue;
        }
        let mut out = [0u32; 3];
        for k in 0..3 {
            out[k] = *ids.entry(tri[k]).or_insert_with(|| {
                mesh.positions.push(corners[k]);
                (mesh.positions.len() - 1) as u32
            });
        }
        mesh.triangles.push(out);
    }
    Ok(mesh)
}

fn polygonize_layer(values: &[f32], a: usize, z: usize, iso: f32) -> Vec<[u64; 3]> {
    let mut out = Vec::new();
    let at = |x: usize, y: usize, z: usize| values[(z * a + y) * a + x];
    for y in 0..a - 1 {
        for x in 0..a - 1 {
            let mut case = 0usize;
            for (bit, c) in CORNERS.iter().enumerate() {
                if at(x + c[0], y + c[1], z + c[2]) < iso {
                    case |= 1 << bit;
                }
            }
            if EDGE_TABLE[case] == 0 {
                continue;
            }
            let row = &TRI_TABLE[case];
            for tri in row.chunks(3).take_while(|t| t[0] >= 0) {
                let edge_id = |e: i8| {
                    let (off, axis) = EDGES[e as usize];
                    let p = ((z + off[2]) * a + (y + off[1])) * a + (x + off[0]);
                    (p * 3 + axis) as u64
                };
                // The table winds triangles towards the inside; reverse so
                // normals point along the field gradient.
                out.push([edge_id(tri[0]), edge_id(tri[2]), edge_id(tri[1])]);
            }
        }
    }
    out
}

/// Iso crossing on the grid edge `edge` (lower grid point * 3 + axis).
fn edge_vertex(values: &[f32], a: usize, iso: f32, edge: u64) -> [f32; 3] {
    let edge = edge as usize;
    let (p, axis) = (edge / 3, edge % 3);
    let lo = [p % a, (p / a) % a, p / (a * a)];
    let step = [1, a, a * a][axis];
    let v0 = values[p] as f64;
    let v1 = values[p + step] as f64;
    let t = if v1 == v0 {
        0.5
    } else {
        (iso as f64 - v0) / (v1 - v0)
    };
    let mut pos = [0f32; 3];
    for k in 0..3 {
        let c = cell_center(lo[k], a);
        pos[k] = if k == axis {
            (c + t * (2.0 / a as f64)) as f32
        } else {
            c as f32
        };
    }
    pos
}
