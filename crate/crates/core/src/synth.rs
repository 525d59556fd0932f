//! Analytic CSG scenes rasterized into feature volumes with exact labels.
//!
//! Channel layout matches [`ChannelDecoder`](crate::ChannelDecoder): signed
//! distance, then RGB, then zero padding.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cell_center, Mask3D, VoxelGrid};

/// Amplitude of the uniform noise added to the corrupted region.
pub const CORRUPTION_AMPLITUDE: f32 = 0.3;
pub const DEFAULT_SEED: u64 = 42;
/// Channels needed for signed distance plus RGB.
pub const MIN_CHANNELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    #[default]
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
    },
    /// Capped cylinder.
    Cylinder {
        center: [f64; 3],
        radius: f64,
        half_height: f64,
        #[serde(default)]
        axis: Axis,
    },
}

impl Shape {
    /// Exact signed distance at `p`.
    pub fn sdf(&self, p: [f64; 3]) -> f64 {
        match *self {
            Shape::Sphere { center, radius } => length(sub(p, center)) - radius,
            Shape::Box {
                center,
                half_extents,
            } => {
                let q = [0, 1, 2].map(|k| (p[k] - center[k]).abs() - half_extents[k]);
                let outside = length(q.map(|v| v.max(0.0)));
                outside + q[0].max(q[1]).max(q[2]).min(0.0)
            }
            Shape::Cylinder {
                center,
                radius,
                half_height,
                axis,
            } => {
                let d = sub(p, center);
                let a = axis.index();
                let radial = ((0..3).filter(|k| *k != a).map(|k| d[k] * d[k]).sum::<f64>()).sqrt();
                let q = [radial - radius, d[a].abs() - half_height];
                let outside = (q[0].max(0.0).powi(2) + q[1].max(0.0).powi(2)).sqrt();
                outside + q[0].max(q[1]).min(0.0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (center, sizes): ([f64; 3], Vec<f64>) = match self {
            Shape::Sphere { center, radius } => (*center, vec![*radius]),
            Shape::Box {
                center,
                half_extents,
            } => (*center, half_extents.to_vec()),
            Shape::Cylinder {
                center,
                radius,
                half_height,
                ..
            } => (*center, vec![*radius, *half_height]),
        };
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Scene("primitive center must be finite".into()));
        }
        if sizes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Scene("radii and extents must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub label: String,
    pub color: [f32; 3],
    #[serde(flatten)]
    pub shape: Shape,
}

/// Union of labeled primitives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
}

impl SceneSpec {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self> {
        let scene = Self { primitives };
        scene.validate()?;
        Ok(scene)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Self = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() {
            return Err(Error::Scene("scene needs at least one primitive".into()));
        }
        let mut seen = HashSet::new();
        for p in &self.primitives {
            if !seen.insert(p.label.as_str()) {
                return Err(Error::Scene(format!("duplicate label {:?}", p.label)));
            }
            if p.color.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::Scene(format!(
                    "color of {:?} outside [0, 1]",
                    p.label
                )));
            }
            p.shape.validate()?;
        }
        Ok(())
    }

    /// Union distance and the index of the closest primitive (first on ties).
    pub fn sdf(&self, p: [f64; 3]) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (i, prim) in self.primitives.iter().enumerate() {
            let d = prim.shape.sdf(p);
            if d < best.0 {
                best = (d, i);
            }
        }
        best
    }

    pub fn find(&self, label: &str) -> Option<&Primitive> {
        self.primitives.iter().find(|p| p.label == label)
    }
}

/// A rasterized scene: the feature volume plus one inside-mask per label.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub grid: VoxelGrid,
    pub labels: Vec<(String, Mask3D)>,
}

impl Raster {
    pub fn mask(&self, label: &str) -> Option<&Mask3D> {
        self.labels.iter().find(|(l, _)| l == label).map(|(_, m)| m)
    }
}

fn voxel_point([x, y, z]: [usize; 3], a: usize) -> [f64; 3] {
    [cell_center(x, a), cell_center(y, a), cell_center(z, a)]
}

/// Samples `scene` at the voxel centers of an `A³×F` grid.
///
/// Channel 0 is the union distance, channels 1..4 the color of the closest
/// primitive, the rest zero. Each label mask holds the voxels where that
/// primitive's own distance is `<= 0`.
pub fn rasterize(scene: &SceneSpec, resolution: usize, channels: usize) -> Result<Raster> {
    if channels < MIN_CHANNELS {
        return Err(Error::Dimension(format!(
            "synthesis needs at least {MIN_CHANNELS} channels, got {channels}"
        )));
    }
    scene.validate()?;
    let grid = VoxelGrid::from_fn(resolution, channels, |v, out| {
        let (d, i) = scene.sdf(voxel_point(v, resolution));
        out[0] = d as f32;
        out[1..4].copy_from_slice(&scene.primitives[i].color);
    })?;
    let labels = scene
        .primitives
        .iter()
        .map(|p| {
            let mask = Mask3D::from_fn(resolution, |v| {
                p.shape.sdf(voxel_point(v, resolution)) <= 0.0
            });
            (p.label.clone(), mask)
        })
        .collect();
    Ok(Raster { grid, labels })
}

/// Inputs and ground truth for one merge experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct EditPair {
    /// Original scene.
    pub original: VoxelGrid,
    /// Edited scene, possibly with a damaged region.
    pub edited: VoxelGrid,
    /// Voxels of primitives that disappeared.
    pub removed: Mask3D,
    /// Voxels of primitives that appeared.
    pub added: Mask3D,
    /// Edited scene without damage.
    pub truth: VoxelGrid,
}

/// Builds an edit pair from two scenes.
///
/// Primitives present in only one scene form the removed and added masks.
/// When `corrupt` names a primitive kept by the edit, its voxels in the
/// edited volume get uniform noise in `±0.3` on every channel, drawn from
/// a ChaCha8 stream seeded with `seed` in voxel order.
pub fn make_edit_pair(
    original: &SceneSpec,
    edited: &SceneSpec,
    corrupt: Option<&str>,
    resolution: usize,
    channels: usize,
    seed: u64,
) -> Result<EditPair> {
    let before = rasterize(original, resolution, channels)?;
    let after = rasterize(edited, resolution, channels)?;
    let mut removed = Mask3D::empty(resolution);
    for p in original
        .primitives
        .iter()
        .filter(|p| !edited.primitives.contains(p))
    {
        removed = removed.union(before.mask(&p.label).expect("rasterized label"))?;
    }
    let mut added = Mask3D::empty(resolution);
    for p in edited
        .primitives
        .iter()
        .filter(|p| !original.primitives.contains(p))
    {
        added = added.union(after.mask(&p.label).expect("rasterized label"))?;
    }

    let mut damaged = after.grid.clone();
    if let Some(label) = corrupt {
        let kept = original
            .find(label)
            .filter(|p| edited.primitives.contains(p));
        if kept.is_none() {
            return Err(Error::Scene(format!(
                "corrupt region {label:?} must be a primitive untouched by the edit"
            )));
        }
        let region = after.mask(label).expect("kept label is rasterized");
        if region.intersects(&removed) || region.intersects(&added) {
            return Err(Error::Scene(format!(
                "corrupt region {label:?} overlaps the edit masks"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, _) in region.bits().iter().enumerate().filter(|(_, b)| **b) {
            for v in damaged.voxel_at_mut(i) {
                *v += rng.random_range(-CORRUPTION_AMPLITUDE..=CORRUPTION_AMPLITUDE);
            }
        }
    }

    Ok(EditPair {
        original: before.grid,
        edited: damaged,
        removed,
        added,
        truth: after.grid,
    })
}

/// The two-object scene used by the examples and the merge experiments:
/// a sphere and a box, and the same scene with the sphere swapped for a
/// cylinder.
pub fn sphere_to_cylinder_scenes() -> (SceneSpec, SceneSpec) {
    let box_prim = Primitive {
        label: "box".into(),
        color: [0.2, 0.4, 0.9],
        shape: Shape::Box {
            center: [0.45, 0.0, 0.0],
            half_extents: [0.25, 0.25, 0.25],
        },
    };
    let sphere = Primitive {
        label: "sphere".into(),
        color: [0.9, 0.3, 0.1],
        shape: Shape::Sphere {
            center: [-0.4, 0.0, 0.0],
            radius: 0.3,
        },
    };
    let cylinder = Primitive {
        label: "cylinder".into(),
        color: [0.1, 0.8, 0.3],
        shape: Shape::Cylinder {
            center: [-0.4, 0.0, 0.0],
            radius: 0.25,
            half_height: 0.35,
            axis: Axis::Y,
        },
    };
    (
        SceneSpec {
            primitives: vec![sphere, box_prim.clone()],
        },
        SceneSpec {
            primitives: vec![cylinder, box_prim],
        },
    )
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn length(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sphere(label: &str, center: [f64; 3], radius: f64) -> Primitive {
        Primitive {
            label: label.into(),
            color: [1.0, 0.0, 0.0],
            shape: Shape::Sphere { center, radius },
        }
    }

    #[test]
    fn centered_sphere() {
        let scene = SceneSpec::new(vec![sphere("s", [0.0; 3], 0.5)]).unwrap();
        let r = rasterize(&scene, 32, 4).unwrap();
        // Voxel 16 sits half a cell (1/32) off the origin on each axis.
        let center = r.grid.voxel(16, 16, 16)[0] as f64;
        let half_diagonal = 3f64.sqrt() / 32.0;
        assert!((center + 0.5).abs() <= half_diagonal + 1e-6);
        assert!((center - (half_diagonal - 0.5)).abs() < 1e-6);
        assert!(r.grid.voxel(0, 0, 0)[0] > 0.0);
        assert_eq!(r.grid.voxel(16, 16, 16)[1..], [1.0, 0.0, 0.0]);
    }

    #[test]
    fn box_and_cylinder_distances() {
        let b = Shape::Box {
            center: [0.0; 3],
            half_extents: [1.0, 2.0, 3.0],
        };
        assert_eq!(b.sdf([0.0; 3]), -1.0);
        assert_eq!(b.sdf([2.0, 0.0, 0.0]), 1.0);
        assert_eq!(b.sdf([4.0, 6.0, 3.0]), 5.0);
        let c = Shape::Cylinder {
            center: [0.0; 3],
            radius: 1.0,
            half_height: 2.0,
            axis: Axis::Z,
        };
        assert_eq!(c.sdf([0.0; 3]), -1.0);
        assert_eq!(c.sdf([0.0, 0.0, 2.5]), 0.5);
        assert_eq!(c.sdf([4.0, 0.0, 6.0]), 5.0);
        assert_eq!(c.sdf([0.0, 3.0, 0.0]), 2.0);
    }

    #[test]
    fn disjoint_primitives_have_disjoint_masks() {
        let (a, _) = sphere_to_cylinder_scenes();
        let r = rasterize(&a, 24, 5).unwrap();
        assert!(!r.mask("sphere").unwrap().intersects(r.mask("box").unwrap()));
        assert!(r.mask("sphere").unwrap().count() > 0);
        assert!(r.grid.voxel(0, 0, 0)[4] == 0.0);
    }

    #[test]
    fn scene_validation() {
        assert!(matches!(SceneSpec::new(vec![]), Err(Error::Scene(_))));
        let dup = vec![sphere("a", [0.0; 3], 0.1), sphere("a", [0.5; 3], 0.1)];
        assert!(matches!(SceneSpec::new(dup), Err(Error::Scene(_))));
        assert!(matches!(
            SceneSpec::new(vec![sphere("a", [0.0; 3], -0.1)]),
            Err(Error::Scene(_))
        ));
        let scene = SceneSpec::new(vec![sphere("a", [0.0; 3], 0.1)]).unwrap();
        assert!(matches!(rasterize(&scene, 8, 3), Err(Error::Dimension(_))));
    }

    #[test]
    fn json_roundtrip() {
        let (a, _) = sphere_to_cylinder_scenes();
        let text = serde_json::to_string(&a).unwrap();
        assert!(text.contains("\"type\":\"sphere\""));
        assert_eq!(SceneSpec::from_json(&text).unwrap(), a);
    }

    #[test]
    fn edit_pair_masks_and_corruption() {
        let (a, b) = sphere_to_cylinder_scenes();
        let p = make_edit_pair(&a, &b, Some("box"), 24, 4, DEFAULT_SEED).unwrap();
        let ra = rasterize(&a, 24, 4).unwrap();
        let rb = rasterize(&b, 24, 4).unwrap();
        assert_eq!(&p.removed, ra.mask("sphere").unwrap());
        assert_eq!(&p.added, rb.mask("cylinder").unwrap());
        let boxed = rb.mask("box").unwrap();
        for i in 0..p.truth.voxel_count() {
            let (e, t) = (p.edited.voxel_at(i), p.truth.voxel_at(i));
            if boxed.bits()[i] {
                assert!(e
                    .iter()
                    .zip(t)
                    .all(|(e, t)| (e - t).abs() <= CORRUPTION_AMPLITUDE + 1e-6));
            } else {
                assert_eq!(e, t);
            }
        }
        assert_ne!(p.edited, p.truth);
        assert_eq!(
            p,
            make_edit_pair(&a, &b, Some("box"), 24, 4, DEFAULT_SEED).unwrap()
        );
    }

    #[test]
    fn edit_pair_errors() {
        let (a, b) = sphere_to_cylinder_scenes();
        assert!(matches!(
            make_edit_pair(&a, &b, Some("sphere"), 8, 4, 0),
            Err(Error::Scene(_))
        ));
        assert!(matches!(
            make_edit_pair(&a, &b, Some("nope"), 8, 4, 0),
            Err(Error::Scene(_))
        ));
        // A big sphere swallowing the box's neighborhood overlaps it.
        let mut wide = b.clone();
        wide.primitives[0] = sphere("cylinder", [0.2, 0.0, 0.0], 0.6);
        assert!(matches!(
            make_edit_pair(&a, &wide, Some("box"), 16, 4, 0),
            Err(Error::Scene(_))
        ));
    }

    #[test]
    fn identical_scenes_give_identical_grids() {
        let (a, _) = sphere_to_cylinder_scenes();
        let p = make_edit_pair(&a, &a, None, 12, 4, 0).unwrap();
        assert!(p.removed.is_empty() && p.added.is_empty());
        assert_eq!(p.original, p.edited);
        assert_eq!(p.edited, p.truth);
    }

    proptest! {
        #[test]
        fn voxel_values_are_the_analytic_distance(x in 0usize..10, y in 0usize..10, z in 0usize..10) {
            let (a, _) = sphere_to_cylinder_scenes();
            let r = rasterize(&a, 10, 4).unwrap();
            let p = voxel_point([x, y, z], 10);
            let exact = a.primitives.iter().map(|q| q.shape.sdf(p)).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(r.grid.voxel(x, y, z)[0], exact as f32);
        }

        #[test]
        fn distances_are_lipschitz(p in proptest::array::uniform3(-1.0f64..1.0), q in proptest::array::uniform3(-1.0f64..1.0)) {
            let (_, b) = sphere_to_cylinder_scenes();
            for prim in &b.primitives {
                let gap = (prim.shape.sdf(p) - prim.shape.sdf(q)).abs();
                prop_assert!(gap <= length(sub(p, q)) + 1e-12);
            }
        }
    }
}
