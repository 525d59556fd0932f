//! Non-neural core of a training-free 3D shape editing pipeline.
//!
//! The crate covers everything between the neural producers and the final
//! artifacts:
//!
//! * [`grid`]: dense voxel feature volumes, boolean masks, 3D morphology,
//!   color-threshold segmentation lifting and triplane sampling.
//! * [`merge`]: copy-paste and averaged boundary-blending merges of an
//!   original and an edited feature volume.
//! * [`field`]: SDF/color decoding, marching cubes, surface sampling and
//!   chamfer distance.
//! * [`multiview`]: masked latent blending, mask resampling and morphology,
//!   segmentation painting and prompt diffing.
//! * [`metrics`]: directional CLIP scores over precomputed embeddings.
//! * [`synth`]: analytic CSG scenes used as ground truth.
//! * [`io`]: the VXG/MSK containers, PLY meshes and embedding documents.

pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod merge;
pub mod metrics;
pub mod multiview;
pub mod synth;

pub use error::{Error, Result};
pub use field::{
    chamfer, color_mesh, decode_fields, marching_cubes, sample_surface, ChannelDecoder,
    FieldDecoder, PointCloud, TexturedMesh,
};
pub use grid::{
    dilate3d, extract_color_mask, mask_xor, sample_triplane, Aggregation, ColorSpec, Connectivity,
    Mask3D, TriplaneSet, VoxelGrid,
};
pub use merge::{average_merge, copy_paste_merge, EmptyFeature, MergeConfig, MergeMode};
pub use metrics::{DiffTarget, DirectionVariant, EmbeddingSet, MetricsReport};
pub use multiview::{MaskStack2D, MultiViewFeature, PromptPair};

/// Chamfer distances are reported multiplied by this factor.
pub const CHAMFER_REPORT_SCALE: f64 = 1e3;
/// Directional CLIP metrics are reported multiplied by this factor.
pub const METRIC_REPORT_SCALE: f64 = 100.0;
