//! One function per subcommand. Argument structs double as the settings
//! schema: every field is optional on the command line and filled from the
//! config file or the defaults listed next to the struct.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use voxmerge_core::field::FieldDecoder;
use voxmerge_core::io::{self, SlabReader};
use voxmerge_core::merge::{merge as merge_grids, MergePlan};
use voxmerge_core::metrics::CosineMode;
use voxmerge_core::multiview::{self, DownsampleMode};
use voxmerge_core::synth::{self as scenes, SceneSpec};
use voxmerge_core::{
    Aggregation, ChannelDecoder, ColorSpec, Connectivity, EmptyFeature, MergeConfig, MergeMode,
    MetricsReport, PointCloud, PromptPair, VoxelGrid, CHAMFER_REPORT_SCALE,
};

use crate::settings::required;
use crate::{CliError, Context};

fn rgb(v: &[f32], what: &str) -> Result<[f32; 3], CliError> {
    v.try_into().map_err(|_| {
        CliError::Usage(format!(
            "{what} needs three comma-separated components, got {}",
            v.len()
        ))
    })
}

fn same_len(a: &[PathBuf], b: &[PathBuf], what: &str) -> Result<(), CliError> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{what}: {} inputs but {} outputs",
            a.len(),
            b.len()
        )))
    }
}

#[derive(Args, Serialize, Deserialize)]
pub struct LiftMaskArgs {
    /// Color field: a 3-channel RGB grid or a grid in channel layout.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Marker color, r,g,b in [0, 1].
    #[arg(long, value_delimiter = ',')]
    color: Option<Vec<f32>>,
    /// Euclidean RGB distance below which a voxel counts as painted.
    #[arg(long)]
    threshold: Option<f32>,
    /// Keep only voxels with negative SDF (channel-layout grids only).
    #[arg(long, num_args = 0, default_missing_value = "true")]
    inside_only: Option<bool>,
}

pub fn lift_mask(ctx: &Context, flags: LiftMaskArgs) -> Result<(), CliError> {
    let a = ctx.resolve(
        "lift-mask",
        json!({"input": null, "output": null, "color": ColorSpec::GREEN, "threshold": ColorSpec::DEFAULT_THRESHOLD, "inside_only": false}),
        &flags,
    )?;
    let grid = io::read_grid(required(&a.input, "input")?)?;
    let spec = ColorSpec::new(
        rgb(&required(&a.color, "color")?, "color")?,
        required(&a.threshold, "threshold")?,
    )?;
    let inside_only = required(&a.inside_only, "inside_only")?;
    let (colors, sdf) = if grid.channels() == 3 && !inside_only {
        (grid, None)
    } else {
        let (sdf, rgb) = voxmerge_core::decode_fields(&grid, &ChannelDecoder)?;
        (rgb, inside_only.then_some(sdf))
    };
    let mut mask = voxmerge_core::extract_color_mask(&colors, &spec)?;
    if let Some(sdf) = sdf {
        for (bit, d) in mask.bits_mut().iter_mut().zip(sdf.data()) {
            *bit &= *d < 0.0;
        }
    }
    io::write_mask(&mask, required(&a.output, "output")?)?;
    println!("{} of {} voxels set", mask.count(), mask.bits().len());
    Ok(())
}

#[derive(Args, Serialize, Deserialize)]
pub struct MergeArgs {
    #[arg(long)]
    original: Option<PathBuf>,
    #[arg(long)]
    edited: Option<PathBuf>,
    /// Mask of the region the edit removed.
    #[arg(long)]
    removed: Option<PathBuf>,
    /// Mask of the region the edit added.
    #[arg(long)]
    added: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// average or copy-paste.
    #[arg(long)]
    mode: Option<MergeMode>,
    #[arg(long)]
    dilation: Option<usize>,
    /// Weight of the original features in the boundary shell.
    #[arg(long)]
    theta: Option<f32>,
    /// zeros or corners.
    #[arg(long)]
    empty: Option<EmptyFeature>,
    /// 6 or 26.
    #[arg(long)]
    connectivity: Option<Connectivity>,
    #[arg(long, num_args = 0, default_missing_value = "true")]
    blend_from_pristine: Option<bool>,
    /// Stream the edited grid slab by slab instead of loading it.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    in_place: Option<bool>,
}

pub fn merge(ctx: &Context, flags: MergeArgs) -> Result<(), CliError> {
    let defaults = MergeConfig::default();
    let a = ctx.resolve(
        "merge",
        json!({
            "original": null, "edited": null, "removed": null, "added": null, "output": null,
            "mode": MergeMode::default(), "dilation": defaults.dilation, "theta": defaults.theta,
            "empty": defaults.empty, "connectivity": defaults.connectivity,
            "blend_from_pristine": defaults.blend_from_pristine, "in_place": false,
        }),
        &flags,
    )?;
    let cfg = MergeConfig {
        dilation: required(&a.dilation, "dilation")?,
        theta: required(&a.theta, "theta")?,
        connectivity: required(&a.connectivity, "connectivity")?,
        empty: required(&a.empty, "empty")?,
        blend_from_pristine: required(&a.blend_from_pristine, "blend_from_pristine")?,
    };
    let mode = required(&a.mode, "mode")?;
    let edited_path = required(&a.edited, "edited")?;
    let removed = io::read_mask(required(&a.removed, "removed")?)?;
    let added = io::read_mask(required(&a.added, "added")?)?;
    let mut grid = io::read_grid(required(&a.original, "original")?)?;
    if required(&a.in_place, "in_place")? {
        let plan = MergePlan::new(&grid, &removed, &added, mode, &cfg)?;
        plan.apply_slabs(&mut grid, &mut SlabReader::open(&edited_path)?)?;
    } else {
        let edited = io::read_grid(&edited_path)?;
        grid = merge_grids(&grid, &edited, &removed, &added, mode, &cfg)?;
    }
    io::write_grid(&grid, required(&a.output, "output")?)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    /// SDF in channel 0, RGB in channels 1-3.
    Channel,
    /// SDF in channel 0, no colors.
    Sdf,
}

struct SdfOnly;

impl FieldDecoder for SdfOnly {
    fn accepts(&self, channels: usize) -> bool {
        channels >= 1
    }

    fn decode(&self, feature: &[f32]) -> (f32, [f32; 3]) {
        (feature[0], [0.0; 3])
    }
}

#[derive(Args, Serialize, Deserialize)]
pub struct MeshArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    iso: Option<f32>,
    #[arg(long)]
    decoder: Option<Decoder>,
}

pub fn mesh(ctx: &Context, flags: MeshArgs) -> Result<(), CliError> {
    let a = ctx.resolve(
        "mesh",
        json!({"input": null, "output": null, "iso": 0.0, "decoder": Decoder::Channel}),
        &flags,
    )?;
    let grid = io::read_grid(required(&a.input, "input")?)?;
    let decoder = required(&a.decoder, "decoder")?;
    let (sdf, rgb) = match decoder {
        Decoder::Channel => voxmerge_core::decode_fields(&grid, &ChannelDecoder)?,
        Decoder::Sdf => voxmerge_core::decode_fields(&grid, &SdfOnly)?,
    };
    let mut mesh = voxmerge_core::marching_cubes(&sdf, required(&a.iso, "iso")?)?;
    if matches!(decoder, Decoder::Channel) && !mesh.is_empty() {
        mesh = voxmerge_core::color_mesh(&mesh, &rgb)?;
    }
    io::write_mesh_ply(&mesh, required(&a.output, "output")?)?;
    println!(
        "{} vertices, {} triangles",
        mesh.positions.len(),
        mesh.triangles.len()
    );
    Ok(())
}

#[derive(Args, Serialize, Deserialize)]
pub struct ChamferArgs {
    /// First PLY; meshes are sampled, point sets are used as is.
    a: Option<PathBuf>,
    b: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Decimal places of the printed value.
    #[arg(long)]
    precision: Option<usize>,
}

fn points(path: &Path, samples: usize, seed: u64) -> Result<PointCloud, CliError> {
    let mesh = io::read_ply(path)?;
    if mesh.triangles.is_empty() {
        Ok(PointCloud::new(mesh.positions))
    } else {
        Ok(voxmerge_core::sample_surface(&mesh, samples, seed)?)
    }
}

pub fn chamfer(ctx: &Context, flags: ChamferArgs) -> Result<(), CliError> {
    let a = ctx.resolve(
        "chamfer",
        json!({"a": null, "b": null, "samples": 10000, "seed": 0, "precision": 3}),
        &flags,
    )?;
    let (n, seed) = (required(&a.samples, "samples")?, required(&a.seed, "seed")?);
    let pa = points(&required(&a.a, "a")?, n, seed)?;
    let pb = points(&required(&a.b, "b")?, n, seed)?;
    let cd = voxmerge_core::chamfer(&pa, &pb)? * CHAMFER_REPORT_SCALE;
    println!("{cd:.*}", required(&a.precision, "precision")?);
    Ok(())
}

#[derive(Args, Serialize, Deserialize)]
pub struct MetricsArgs {
    /// Embeddings JSON document.
    embeddings: Option<PathBuf>,
    /// Score with 1 - cosine similarity.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    cosine_as_distance: Option<bool>,
    /// Print a JSON object instead of a table.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    json: Option<bool>,
}

pub fn metrics(ctx: &Context, flags: MetricsArgs) -> Result<(), CliError> {
    let a = ctx.resolve(
        "metrics",
        json!({"embeddings": null, "cosine_as_distance": false, "json": false}),
        &flags,
    )?;
    let set = io::read_embeddings(required(&a.embeddings, "embeddings")?)?;
    let mode = if required(&a.cosine_as_distance, "cosine_as_distance")? {
        CosineMode::Distance
    } else {
        CosineMode::Similarity
    };
    let report = MetricsReport::compute(&set, mode)?;
    if required(&a.json, "json")? {
        let entries: serde_json::Map<_, _> = report
            .entries()
            .into_iter()
            .map(|(name, s)| {
                (
                    name.to_string(),
                    json!({"value": s.reported(), "skipped": s.skipped}),
                )
            })
            .collect();
        println!("{}", serde_json::Value::Object(entries));
    } else {
        print!("{report}");
    }
    Ok(())
}

#[derive(Args, Serialize, Deserialize)]
pub struct BlendArgs {
    #[arg(long, num_args = 1..)]
    edited: Option<Vec<PathBuf>>,
    #[arg(long, num_args = 1..)]
    original: Option<Vec<PathBuf>>,
    /// One grayscale mask per view; resized to the image size if needed.
    #[arg(long, num_args = 1..)]
    masks: Option<Vec<PathBuf>>,
    #[arg(long, num_args = 1..)]
    output: Option<Vec<PathBuf>>,
    /// area-soft or nearest-binary.
    #[arg(long)]
    downsample: Option<DownsampleMode>,
    /// Allow mask sizes that are not integer multiples of the image size.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    resample: Option<bool>,
}

pub fn blend(ctx: &Context, flags: BlendArgs) -> Result<(), CliError> {
    let a = ctx.resolve(
        "blend",
        json!({"edited": null, "original": null, "masks": null, "output": null, "downsample": DownsampleMode::default(), "resample": false}),
        &flags,
    )?;
    let output = required(&a.output, "output")?;
    let edited_paths = required(&a.edited, "edited")?;
    same_len(&edited_paths, &output, "blend")?;
    let edited = multiview::read_images(&edited_paths)?;
    let original = multiview::read_images(&required(&a.original, "original")?)?;
    let mut masks = multiview::read_masks(&required(&a.masks, "masks")?)?;
    if (masks.height(), masks.width()) != (edited.height(), edited.width()) {
        masks = multiview::downsample_mask(
            &masks,
            edited.height(),
            edited.width(),
            required(&a.downsample, "downsample")?,
            required(&a.resample, "resample")?,
        )?;
    }
    let out = multiview::blend_features(&edited, &original, &masks)?;
    multiview::write_images(&out, &output)?;
    Ok(())
}

#[derive(Args, Serialize, Deserialize)]
pub struct PaintArgs {
    #[arg(long, num_args = 1..)]
    images: Option<Vec<PathBuf>>,
    #[arg(long, num_args = 1..)]
    masks: Option<Vec<PathBuf>>,
    #[arg(long, num_args = 1..)]
    output: Option<Vec<PathBuf>>,
    /// Marker color, r,g,b in [0, 1].
    #[arg(long, value_delimiter = ',')]
    color: Option<Vec<f32>>,
}

pub fn paint(ctx: &Context, flags: PaintArgs) -> Result<(), CliError> {
    let a = ctx.resolve(
        "paint",
        json!({"images": null, "masks": null, "output": null, "color": ColorSpec::GREEN}),
        &flags,
    )?;
    let output = required(&a.output, "output")?;
    let image_paths = required(&a.images, "images")?;
    same_len(&image_paths, &output, "paint")?;
    let images = multiview::read_images(&image_paths)?;
    let masks = multiview::read_masks(&required(&a.masks, "masks")?)?;
    let spec = ColorSpec::new(
        rgb(&required(&a.color, "color")?, "color")?,
        ColorSpec::DEFAULT_THRESHOLD,
    )?;
    multiview::write_images(&multiview::paint_masks(&images, &masks, &spec)?, &output)?;
    Ok(())
}

#[derive(Args, Serialize, Deserialize)]
pub struct PromptDiffArgs {
    /// Prompt describing the input object.
    #[arg(long)]
    input: Option<String>,
    /// Prompt describing the edited object.
    #[arg(long)]
    edited: Option<String>,
}

pub fn prompt_diff(ctx: &Context, flags: PromptDiffArgs) -> Result<(), CliError> {
    let a = ctx.resolve(
        "prompt-diff",
        json!({"input": null, "edited": null}),
        &flags,
    )?;
    let pair = PromptPair::new(
        &required(&a.input, "input")?,
        &required(&a.edited, "edited")?,
    )?;
    let diff = multiview::prompt_diff(&pair);
    println!(
        "{}",
        json!({
            "status": diff.status,
            "removed": diff.removed_text(),
            "added": diff.added_text(),
            "generic": diff.generic_text(),
            "hunks": diff.hunks,
        })
    );
    Ok(())
}

#[derive(Args, Serialize, Deserialize)]
pub struct MaskMorphArgs {
    #[arg(long, num_args = 1..)]
    masks: Option<Vec<PathBuf>>,
    #[arg(long, num_args = 1..)]
    output: Option<Vec<PathBuf>>,
    /// Pixels to grow by; negative values erode.
    #[arg(long, allow_negative_numbers = true)]
    steps: Option<i64>,
}

pub fn mask_morph(ctx: &Context, flags: MaskMorphArgs) -> Result<(), CliError> {
    let a = ctx.resolve(
        "mask-morph",
        json!({"masks": null, "output": null, "steps": 1}),
        &flags,
    )?;
    let output = required(&a.output, "output")?;
    let mask_paths = required(&a.masks, "masks")?;
    same_len(&mask_paths, &output, "mask-morph")?;
    let masks = multiview::read_masks(&mask_paths)?;
    multiview::write_masks(
        &multiview::morph2d_signed(&masks, required(&a.steps, "steps")?),
        &output,
    )?;
    Ok(())
}

#[derive(Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Original scene JSON; without scenes the sphere-to-cylinder pair is used.
    #[arg(long, requires = "edited")]
    original: Option<PathBuf>,
    #[arg(long, requires = "original")]
    edited: Option<PathBuf>,
    /// Label of a kept primitive whose edited voxels get noise.
    #[arg(long)]
    corrupt: Option<String>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Receives original.vxg, edited.vxg, truth.vxg, removed.msk, added.msk.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn read_scene(path: &Path) -> Result<SceneSpec, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(SceneSpec::from_json(&text)?)
}

pub fn synth(ctx: &Context, flags: SynthArgs) -> Result<(), CliError> {
    let a = ctx.resolve(
        "synth",
        json!({
            "original": null, "edited": null, "corrupt": null, "resolution": 256, "channels": 40,
            "seed": scenes::DEFAULT_SEED, "out_dir": null,
        }),
        &flags,
    )?;
    let (original, edited) = match (&a.original, &a.edited) {
        (Some(o), Some(e)) => (read_scene(o)?, read_scene(e)?),
        (None, None) => scenes::sphere_to_cylinder_scenes(),
        _ => {
            return Err(CliError::Usage(
                "--original and --edited go together".into(),
            ))
        }
    };
    let pair = scenes::make_edit_pair(
        &original,
        &edited,
        a.corrupt.as_deref(),
        required(&a.resolution, "resolution")?,
        required(&a.channels, "channels")?,
        required(&a.seed, "seed")?,
    )?;
    let dir = required(&a.out_dir, "out_dir")?;
    std::fs::create_dir_all(&dir)?;
    io::write_grid(&pair.original, dir.join("original.vxg"))?;
    io::write_grid(&pair.edited, dir.join("edited.vxg"))?;
    io::write_grid(&pair.truth, dir.join("truth.vxg"))?;
    io::write_mask(&pair.removed, dir.join("removed.msk"))?;
    io::write_mask(&pair.added, dir.join("added.msk"))?;
    println!(
        "removed {} voxels, added {} voxels",
        pair.removed.count(),
        pair.added.count()
    );
    Ok(())
}

#[derive(Args, Serialize, Deserialize)]
pub struct TriplaneSampleArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    resolution: Option<usize>,
    /// concat, sum or mean.
    #[arg(long)]
    aggregation: Option<Aggregation>,
}

pub fn triplane_sample(ctx: &Context, flags: TriplaneSampleArgs) -> Result<(), CliError> {
    let a = ctx.resolve(
        "triplane-sample",
        json!({"input": null, "output": null, "resolution": 256, "aggregation": Aggregation::default()}),
        &flags,
    )?;
    let tp = io::read_triplane(
        required(&a.input, "input")?,
        required(&a.aggregation, "aggregation")?,
    )?;
    let grid: VoxelGrid =
        voxmerge_core::sample_triplane(&tp, required(&a.resolution, "resolution")?)?;
    io::write_grid(&grid, required(&a.output, "output")?)?;
    Ok(())
}
