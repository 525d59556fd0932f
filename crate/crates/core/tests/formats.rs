mod common;

use std::io::Cursor;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use voxmerge_core::grid::{Aggregation, TriplaneSet};
use voxmerge_core::io::{self, SlabReader, VxgHeader, HEADER_LEN};
use voxmerge_core::{Error, Mask3D, TexturedMesh, VoxelGrid};

fn arb_grid() -> impl Strategy<Value = VoxelGrid> {
    (1usize..6, 1usize..5).prop_flat_map(|(a, f)| {
        proptest::collection::vec(
            any::<f32>().prop_filter("finite", |v| v.is_finite()),
            a * a * a * f,
        )
        .prop_map(move |d| VoxelGrid::from_data(a, f, d).unwrap())
    })
}

fn arb_mask() -> impl Strategy<Value = Mask3D> {
    (1usize..7).prop_flat_map(|a| {
        proptest::collection::vec(any::<bool>(), a * a * a)
            .prop_map(move |b| Mask3D::from_bits(a, b).unwrap())
    })
}

fn arb_mesh() -> impl Strategy<Value = TexturedMesh> {
    (1usize..30, any::<bool>()).prop_flat_map(|(n, colored)| {
        (
            proptest::collection::vec(proptest::array::uniform3(-1.0f32..1.0), n),
            proptest::collection::vec(proptest::array::uniform3(0u8..=255), n),
            proptest::collection::vec(proptest::array::uniform3(0..n as u32), 0..20),
        )
            .prop_map(move |(positions, rgb, triangles)| TexturedMesh {
                positions,
                colors: colored.then(|| rgb.iter().map(|c| c.map(|k| k as f32 / 255.0)).collect()),
                triangles,
            })
    })
}

proptest! {
    #[test]
    fn grid_roundtrip(g in arb_grid()) {
        let mut bytes = Vec::new();
        io::write_grid_to(&g, &mut bytes).unwrap();
        prop_assert_eq!(bytes.len() as u64, HEADER_LEN + 4 * g.data().len() as u64);
        let back = io::read_grid_from(&mut Cursor::new(&bytes)).unwrap();
        prop_assert!(back.data().iter().zip(g.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert_eq!((back.resolution(), back.channels()), (g.resolution(), g.channels()));
    }

    #[test]
    fn every_truncation_is_a_format_error(g in arb_grid(), cut in 0.0f64..1.0) {
        let mut bytes = Vec::new();
        io::write_grid_to(&g, &mut bytes).unwrap();
        let keep = (cut * bytes.len() as f64) as usize;
        let r = io::read_grid_from(&mut Cursor::new(&bytes[..keep]));
        let rejected = matches!(r, Err(Error::Format { .. }));
        prop_assert!(rejected);
    }

    #[test]
    fn mask_roundtrip(m in arb_mask()) {
        let mut bytes = Vec::new();
        io::write_mask_to(&m, &mut bytes).unwrap();
        let header = VxgHeader::decode(bytes[..HEADER_LEN as usize].try_into().unwrap()).unwrap();
        prop_assert_eq!(header.channels, 1);
        prop_assert_eq!(io::read_mask_from(&mut Cursor::new(&bytes)).unwrap(), m);
    }

    #[test]
    fn mesh_roundtrip(mesh in arb_mesh()) {
        let mut bytes = Vec::new();
        io::write_mesh_ply_to(&mesh, &mut bytes).unwrap();
        let back = io::read_ply_from(&mut Cursor::new(&bytes)).unwrap();
        prop_assert_eq!(&back, &mesh);
        let mut again = Vec::new();
        io::write_mesh_ply_to(&back, &mut again).unwrap();
        prop_assert_eq!(again, bytes);
    }

    #[test]
    fn triplane_roundtrip(r in 1usize..5, f in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plane = |rng: &mut ChaCha8Rng| random_grid(rng, 1, r * r * f).into_data();
        let tp = TriplaneSet::new(r, f, plane(&mut rng), plane(&mut rng), plane(&mut rng), Aggregation::Mean).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tpl");
        io::write_triplane(&tp, &path).unwrap();
        prop_assert_eq!(io::read_triplane(&path, Aggregation::Mean).unwrap(), tp);
    }
}

#[test]
fn slab_reader_yields_z_slabs_in_order() {
    let g = random_grid(&mut ChaCha8Rng::seed_from_u64(1), 5, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.vxg");
    io::write_grid(&g, &path).unwrap();
    let mut reader = SlabReader::open(&path).unwrap();
    assert_eq!(
        (reader.resolution(), reader.channels(), reader.slab_len()),
        (5, 3, 75)
    );
    let mut buf = vec![0.0; reader.slab_len()];
    let mut seen = Vec::new();
    while let Some(z) = reader.read_slab(&mut buf).unwrap() {
        assert_eq!(buf, g.data()[z * 75..(z + 1) * 75]);
        seen.push(z);
    }
    assert_eq!(seen, [0, 1, 2, 3, 4]);
}

#[test]
fn fixtures_parse() {
    let m = io::read_mask(fixture("diagonal_4.msk")).unwrap();
    assert_eq!(m.count(), 16);
    let mesh = io::read_ply(fixture("triangle.ply")).unwrap();
    assert_eq!(mesh.triangles, [[0, 1, 2]]);
    assert_eq!(mesh.colors.unwrap()[2], [0.2, 1.0, 0.0]);
    for name in ["hostile_huge.vxg", "hostile_overflow.vxg"] {
        assert!(
            matches!(io::read_grid(fixture(name)), Err(Error::Format { .. })),
            "{name}"
        );
    }
    assert!(io::read_ply(fixture("hostile_vertices.ply")).is_err());
    let e = io::read_embeddings(fixture("identity_embeddings.json")).unwrap();
    assert_eq!((e.views(), e.dimension()), (3, 4));
}

#[test]
fn points_ply_has_no_faces() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.ply");
    let cloud = sphere_points(10, 0.5, 0);
    io::write_points_ply(&cloud, &path).unwrap();
    let back = io::read_ply(&path).unwrap();
    assert!(back.triangles.is_empty());
    assert_eq!(back.positions, cloud.positions);
}
