//! Merging an edited feature volume back into the original one.
//!
//! Two strategies share one per-voxel kernel:
//!
//! * **copy-paste**: voxels of the removed region `M_i` are nullified, then
//!   voxels of the added region `M_e` are taken from the edited grid.
//! * **average**: copy-paste, followed by linear blending
//!   `θ·V_i + (1 − θ)·V_e` over the shell `K = M_e ⊕ dilate(M_e, d)`, where
//!   `V_i` is the post-copy-paste state.
//!
//! No step reads a neighbor's feature, so the whole merge reduces to one
//! classification per voxel (`M_e`, else `K`, else `M_i`, else untouched).
//! That is what allows the in-place and z-slab streaming variants.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dilate3d, mask_xor, Connectivity, Mask3D, VoxelGrid};
use crate::io::SlabReader;

/// Feature written into nullified voxels.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmptyFeature {
    /// All-zero vector.
    #[default]
    Zeros,
    /// Mean feature of the eight corner voxels of the original grid.
    Corners,
    /// Explicit vector; its length must equal the grid channel count.
    Explicit(Vec<f32>),
}

impl FromStr for EmptyFeature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeros" => Ok(EmptyFeature::Zeros),
            "corners" => Ok(EmptyFeature::Corners),
            other => Err(Error::Domain(format!(
                "empty feature must be zeros or corners, got {other:?}"
            ))),
        }
    }
}

/// Which merge to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergeMode {
    #[default]
    Average,
    CopyPaste,
}

impl FromStr for MergeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(MergeMode::Average),
            "copy-paste" => Ok(MergeMode::CopyPaste),
            other => Err(Error::Domain(format!(
                "merge mode must be average or copy-paste, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for MergeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MergeMode::Average => "average",
            MergeMode::CopyPaste => "copy-paste",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeConfig {
    /// Dilation steps applied to `M_e` before taking the XOR shell.
    pub dilation: usize,
    /// Weight of the original grid inside the shell.
    pub theta: f32,
    pub connectivity: Connectivity,
    pub empty: EmptyFeature,
    /// Blend the shell against the original grid as it was before
    /// nullification instead of the post-copy-paste state.
    pub blend_from_pristine: bool,
}

impl Default for MergeConfig {
    fn default() -> Self {
        Self {
            dilation: 2,
            theta: 0.5,
            connectivity: Connectivity::TwentySix,
            empty: EmptyFeature::Zeros,
            blend_from_pristine: false,
        }
    }
}

impl MergeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Domain(format!(
                "theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        if let EmptyFeature::Explicit(v) = &self.empty {
            crate::grid::check_finite(v)?;
        }
        Ok(())
    }

    /// Resolves the nullification vector against the original grid.
    pub fn empty_feature(&self, original: &VoxelGrid) -> Result<Vec<f32>> {
        let f = original.channels();
        match &self.empty {
            EmptyFeature::Zeros => Ok(vec![0.0; f]),
            EmptyFeature::Corners => {
                let last = original.resolution() - 1;
                let mut acc = vec![0.0f64; f];
                for corner in 0..8 {
                    let pick = |bit: usize| if corner >> bit & 1 == 1 { last } else { 0 };
                    for (a, v) in acc
                        .iter_mut()
                        .zip(original.voxel(pick(0), pick(1), pick(2)))
                    {
                        *a += *v as f64;
                    }
                }
                Ok(acc.into_iter().map(|a| (a / 8.0) as f32).collect())
            }
            EmptyFeature::Explicit(v) => {
                if v.len() != f {
                    return Err(Error::Dimension(format!(
                        "empty feature has {} channels, grids have {f}",
                        v.len()
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

const KEEP: u8 = 0;
const NULLIFY: u8 = 1;
const REPLACE: u8 = 2;
const BLEND: u8 = 3;
/// Shell voxel that was also in `M_i`.
const BLEND_NULLIFIED: u8 = 4;

/// Precomputed per-voxel actions for one merge.
///
/// Building a plan costs one byte per voxel; applying it touches each
/// feature exactly once, which is what the in-place and streaming paths use.
#[derive(Debug, Clone)]
pub struct MergePlan {
    resolution: usize,
    channels: usize,
    actions: Vec<u8>,
    empty: Vec<f32>,
    theta: f32,
    blend_from_pristine: bool,
}

impl MergePlan {
    /// Plans a merge for grids of shape `original`.
    pub fn new(
        original: &VoxelGrid,
        removed: &Mask3D,
        added: &Mask3D,
        mode: MergeMode,
        cfg: &MergeConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let a = original.resolution();
        removed.check_resolution(a)?;
        added.check_resolution(a)?;
        let empty = cfg.empty_feature(original)?;
        let shell = match mode {
            MergeMode::CopyPaste => None,
            MergeMode::Average if cfg.dilation == 0 => None,
            MergeMode::Average => {
                let dilated = dilate3d(added, cfg.dilation, cfg.connectivity);
                Some(mask_xor(added, &dilated)?)
            }
        };
        let actions = (0..a * a * a)
            .map(|i| {
                let in_removed = removed.bits()[i];
                if added.bits()[i] {
                    REPLACE
                } else if shell.as_ref().is_some_and(|k| k.bits()[i]) {
                    if in_removed {
                        BLEND_NULLIFIED
                    } else {
                        BLEND
                    }
                } else if in_removed {
                    NULLIFY
                } else {
                    KEEP
                }
            })
            .collect();
        Ok(Self {
            resolution: a,
            channels: original.channels(),
            actions,
            empty,
            theta: cfg.theta,
            blend_from_pristine: cfg.blend_from_pristine,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// The blending shell `K` as a mask.
    pub fn shell(&self) -> Mask3D {
        let bits = self
            .actions
            .iter()
            .map(|a| *a == BLEND || *a == BLEND_NULLIFIED)
            .collect();
        Mask3D::from_bits(self.resolution, bits).expect("plan covers the grid")
    }

    /// Applies the plan to the voxels `first_voxel..` covered by `target`,
    /// reading edited features from `edited` (same span).
    pub fn apply_span(&self, first_voxel: usize, target: &mut [f32], edited: &[f32]) {
        let f = self.channels;
        debug_assert_eq!(target.len(), edited.len());
        let theta = self.theta;
        let keep_weight = 1.0 - theta;
        for (k, (dst, src)) in target
            .chunks_exact_mut(f)
            .zip(edited.chunks_exact(f))
            .enumerate()
        {
            match self.actions[first_voxel + k] {
                KEEP => {}
                NULLIFY => dst.copy_from_slice(&self.empty),
                REPLACE => dst.copy_from_slice(src),
                BLEND => {
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d = theta * *d + keep_weight * *s;
                    }
                }
                _ => {
                    if self.blend_from_pristine {
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d = theta * *d + keep_weight * *s;
                        }
                    } else {
                        for ((d, s), e) in dst.iter_mut().zip(src).zip(&self.empty) {
                            *d = theta * *e + keep_weight * *s;
                        }
                    }
                }
            }
        }
    }

    /// Merges `edited` into `target` in place, z-slab parallel.
    pub fn apply(&self, target: &mut VoxelGrid, edited: &VoxelGrid) -> Result<()> {
        target.check_same_shape(edited)?;
        if target.resolution() != self.resolution || target.channels() != self.channels {
            return Err(Error::Dimension("grid does not match merge plan".into()));
        }
        let slab = target.slab_len();
        let voxels_per_slab = self.resolution * self.resolution;
        target
            .data_mut()
            .par_chunks_mut(slab)
            .zip(edited.data().par_chunks(slab))
            .enumerate()
            .for_each(|(z, (dst, src))| self.apply_span(z * voxels_per_slab, dst, src));
        Ok(())
    }

    /// Applies the plan to one z-slab of the target using one z-slab of the
    /// edited grid, for streaming merges that never hold the edited grid.
    pub fn apply_slab(&self, target: &mut VoxelGrid, z: usize, edited_slab: &[f32]) -> Result<()> {
        if target.resolution() != self.resolution || target.channels() != self.channels {
            return Err(Error::Dimension("grid does not match merge plan".into()));
        }
        let slab = target.slab_len();
        if edited_slab.len() != slab || z >= self.resolution {
            return Err(Error::Dimension(format!(
                "slab {z} must hold {slab} values, got {}",
                edited_slab.len()
            )));
        }
        let first = z * self.resolution * self.resolution;
        self.apply_span(
            first,
            &mut target.data_mut()[z * slab..(z + 1) * slab],
            edited_slab,
        );
        Ok(())
    }

    /// Streams the edited grid from a VXG file, holding one slab at a time.
    pub fn apply_slabs(&self, target: &mut VoxelGrid, edited: &mut SlabReader) -> Result<()> {
        if edited.resolution() != target.resolution() || edited.channels() != target.channels() {
            return Err(Error::Dimension(format!(
                "edited file is {}^3 x {}, grid is {}^3 x {}",
                edited.resolution(),
                edited.channels(),
                target.resolution(),
                target.channels()
            )));
        }
        let mut slab = vec![0.0f32; edited.slab_len()];
        while let Some(z) = edited.read_slab(&mut slab)? {
            self.apply_slab(target, z, &slab)?;
        }
        Ok(())
    }
}

fn check_inputs(original: &VoxelGrid, edited: &VoxelGrid) -> Result<()> {
    original.check_same_shape(edited)
}

/// Nullify `M_i`, then paste `V_e` over `M_e`. Inputs are left untouched.
pub fn copy_paste_merge(
    original: &VoxelGrid,
    edited: &VoxelGrid,
    removed: &Mask3D,
    added: &Mask3D,
    cfg: &MergeConfig,
) -> Result<VoxelGrid> {
    let mut out = original.clone();
    copy_paste_merge_in_place(&mut out, edited, removed, added, cfg)?;
    Ok(out)
}

pub fn copy_paste_merge_in_place(
    original: &mut VoxelGrid,
    edited: &VoxelGrid,
    removed: &Mask3D,
    added: &Mask3D,
    cfg: &MergeConfig,
) -> Result<()> {
    check_inputs(original, edited)?;
    let plan = MergePlan::new(original, removed, added, MergeMode::CopyPaste, cfg)?;
    plan.apply(original, edited)
}

/// Copy-paste followed by θ-blending over the dilated XOR shell of `M_e`.
///
/// Voxels outside `dilate(M_e, d) ∪ M_i` come back bit-identical to
/// `original`; voxels of `M_e` bit-identical to `edited`.
pub fn average_merge(
    original: &VoxelGrid,
    edited: &VoxelGrid,
    removed: &Mask3D,
    added: &Mask3D,
    cfg: &MergeConfig,
) -> Result<VoxelGrid> {
    // Validate before paying for the clone.
    check_inputs(original, edited)?;
    cfg.validate()?;
    let mut out = original.clone();
    average_merge_in_place(&mut out, edited, removed, added, cfg)?;
    Ok(out)
}

/// [`average_merge`] writing into `original`; needs one byte per voxel of
/// scratch instead of a second feature grid.
pub fn average_merge_in_place(
    original: &mut VoxelGrid,
    edited: &VoxelGrid,
    removed: &Mask3D,
    added: &Mask3D,
    cfg: &MergeConfig,
) -> Result<()> {
    check_inputs(original, edited)?;
    let plan = MergePlan::new(original, removed, added, MergeMode::Average, cfg)?;
    plan.apply(original, edited)
}

/// Dispatches on `mode`.
pub fn merge(
    original: &VoxelGrid,
    edited: &VoxelGrid,
    removed: &Mask3D,
    added: &Mask3D,
    mode: MergeMode,
    cfg: &MergeConfig,
) -> Result<VoxelGrid> {
    match mode {
        MergeMode::Average => average_merge(original, edited, removed, added, cfg),
        MergeMode::CopyPaste => copy_paste_merge(original, edited, removed, added, cfg),
    }
}
