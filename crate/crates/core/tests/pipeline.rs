mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxmerge_core::field::{
    chamfer, color_mesh, decode_fields, marching_cubes, sample_surface, ChannelDecoder,
};
use voxmerge_core::io;
use voxmerge_core::metrics::{diff_score, direction_score, CosineMode};
use voxmerge_core::synth::{make_edit_pair, sphere_to_cylinder_scenes, SceneSpec};
use voxmerge_core::{
    average_merge, copy_paste_merge, DiffTarget, DirectionVariant, EmbeddingSet, EmptyFeature,
    MergeConfig, VoxelGrid,
};

fn cloud(grid: &VoxelGrid, seed: u64) -> voxmerge_core::PointCloud {
    let (sdf, _) = decode_fields(grid, &ChannelDecoder).unwrap();
    sample_surface(&marching_cubes(&sdf, 0.0).unwrap(), 8000, seed).unwrap()
}

#[test]
fn merging_repairs_a_corrupted_edit() {
    let (a, b) = sphere_to_cylinder_scenes();
    let p = make_edit_pair(&a, &b, Some("box"), 40, 6, 42).unwrap();
    let cfg = MergeConfig {
        empty: EmptyFeature::Corners,
        ..MergeConfig::default()
    };
    let truth = cloud(&p.truth, 1);
    let raw = chamfer(&cloud(&p.edited, 2), &truth).unwrap();
    let cp = chamfer(
        &cloud(
            &copy_paste_merge(&p.original, &p.edited, &p.removed, &p.added, &cfg).unwrap(),
            2,
        ),
        &truth,
    )
    .unwrap();
    let avg = chamfer(
        &cloud(
            &average_merge(&p.original, &p.edited, &p.removed, &p.added, &cfg).unwrap(),
            2,
        ),
        &truth,
    )
    .unwrap();
    assert!(raw > 5.0 * cp, "raw {raw} cp {cp}");
    assert!(avg < 5.0 * cp.max(1e-5), "avg {avg} cp {cp}");
}

#[test]
fn copy_paste_of_a_clean_edit_has_the_true_occupancy() {
    let (a, b) = sphere_to_cylinder_scenes();
    let p = make_edit_pair(&a, &b, None, 24, 4, 0).unwrap();
    let out = copy_paste_merge(
        &p.original,
        &p.edited,
        &p.removed,
        &p.added,
        &MergeConfig::default(),
    )
    .unwrap();
    for i in 0..out.voxel_count() {
        if p.added.bits()[i] {
            assert_eq!(out.voxel_at(i), p.truth.voxel_at(i));
        } else if !p.removed.bits()[i] {
            assert_eq!(
                out.voxel_at(i)[0] < 0.0,
                p.truth.voxel_at(i)[0] < 0.0,
                "voxel {i}"
            );
        }
    }
}

#[test]
fn colored_mesh_roundtrips_through_ply() {
    let (a, _) = sphere_to_cylinder_scenes();
    let p = make_edit_pair(&a, &a, None, 20, 4, 0).unwrap();
    let (sdf, rgb) = decode_fields(&p.original, &ChannelDecoder).unwrap();
    let mesh = color_mesh(&marching_cubes(&sdf, 0.0).unwrap(), &rgb).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ply");
    io::write_mesh_ply(&mesh, &path).unwrap();
    let back = io::read_ply(&path).unwrap();
    assert_eq!(back.positions, mesh.positions);
    assert_eq!(back.triangles, mesh.triangles);
    for (x, y) in back.colors.unwrap().iter().zip(mesh.colors.unwrap()) {
        for k in 0..3 {
            assert!((x[k] - y[k]).abs() <= 0.5 / 255.0 + 1e-6);
        }
    }
}

#[test]
fn synthesis_is_deterministic_and_seed_sensitive() {
    let (a, b) = sphere_to_cylinder_scenes();
    let json = serde_json::to_string(&a).unwrap();
    assert_eq!(SceneSpec::from_json(&json).unwrap(), a);
    let p1 = make_edit_pair(&a, &b, Some("box"), 16, 4, 5).unwrap();
    let p2 = make_edit_pair(&a, &b, Some("box"), 16, 4, 5).unwrap();
    let p3 = make_edit_pair(&a, &b, Some("box"), 16, 4, 6).unwrap();
    assert_eq!(p1, p2);
    assert_ne!(p1.edited, p3.edited);
    assert_eq!(p1.truth, p3.truth);
}

type Views = Vec<Vec<f64>>;

fn random_set(seed: u64, n: usize, d: usize) -> (Views, Views, [Vec<f64>; 4]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = || {
        (0..d)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect::<Vec<f64>>()
    };
    let ii = (0..n).map(|_| v()).collect();
    let ie = (0..n).map(|_| v()).collect();
    (ii, ie, [v(), v(), v(), v()])
}

fn set(ii: Views, ie: Views, t: [Vec<f64>; 4]) -> EmbeddingSet {
    let [a, b, c, d] = t;
    EmbeddingSet::new(ii, ie, a, b, c, d).unwrap()
}

#[test]
fn swapping_images_negates_directions_and_keeps_differences() {
    for seed in 0..20 {
        let (ii, ie, t) = random_set(seed, 8, 16);
        let base = set(ii.clone(), ie.clone(), t.clone());
        let score =
            |e: &EmbeddingSet, v| direction_score(e, v, CosineMode::Similarity).unwrap().value;
        let dot = score(&base, DirectionVariant::Dir);
        let cos = score(&base, DirectionVariant::DirCos);
        let flipped = set(ie.clone(), ii.clone(), t.clone());
        assert!((score(&flipped, DirectionVariant::Dir) + dot).abs() < 1e-12);
        assert!((score(&flipped, DirectionVariant::DirCos) + cos).abs() < 1e-12);
        let d = diff_score(&base, DiffTarget::Edit, CosineMode::Similarity).value;
        let swapped = diff_score(&flipped, DiffTarget::Edit, CosineMode::Similarity).value;
        assert!((d - swapped).abs() < 1e-12);
    }
}
