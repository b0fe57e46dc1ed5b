//! Fusion of per-pixel feature vectors into a voxel layer co-registered
//! with the TSDF.
//!
//! A voxel takes part in an update only when it lies within one truncation
//! distance of the surface measured by the current depth frame and its TSDF
//! voxel has been observed. The feature is read at the voxel center's
//! nearest feature-image pixel, then either replaces the stored feature or
//! is mixed in with an exponential filter.

use std::collections::HashMap;

use nalgebra::Point3;
use rayon::prelude::*;

use crate::camera::{Intrinsics, Pose};
use crate::error::{Error, Result};
use crate::grid::{BlockIndex, GlobalIndex, GridSpec, VoxelIndex, VoxelLayer};
use crate::image::{DepthImage, FeatureImage};
use crate::tsdf::{check_depth_dims, measured_depth, TsdfLayer};

/// Fused feature of one voxel. Unobserved voxels hold an empty vector,
/// which reads as all zeros.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureVoxel {
    pub feature: Vec<f32>,
    pub observed: bool,
}

/// Voxel layer of features with a dimension fixed by the first frame.
#[derive(Debug, Clone)]
pub struct FeatureLayer {
    voxels: VoxelLayer<FeatureVoxel>,
    feature_dim: Option<usize>,
}

impl FeatureLayer {
    pub fn new(spec: GridSpec) -> Self {
        Self {
            voxels: VoxelLayer::new(spec),
            feature_dim: None,
        }
    }

    pub fn with_feature_dim(spec: GridSpec, feature_dim: usize) -> Result<Self> {
        if feature_dim == 0 {
            return Err(Error::InvalidConfig("feature_dim must be positive".into()));
        }
        Ok(Self {
            voxels: VoxelLayer::new(spec),
            feature_dim: Some(feature_dim),
        })
    }

    pub fn spec(&self) -> &GridSpec {
        self.voxels.spec()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.feature_dim
    }

    pub fn voxels(&self) -> &VoxelLayer<FeatureVoxel> {
        &self.voxels
    }

    pub fn num_observed(&self) -> usize {
        self.voxels.iter_voxels().filter(|(_, v)| v.observed).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FusionMode {
    /// The latest observation replaces the stored feature.
    Overwrite,
    /// `f <- alpha * f_new + (1 - alpha) * f`.
    Blend { alpha: f32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureFusionConfig {
    pub mode: FusionMode,
    /// Depth readings beyond this distance are ignored, as in the TSDF.
    pub max_integration_distance_m: f64,
}

impl Default for FeatureFusionConfig {
    fn default() -> Self {
        Self {
            mode: FusionMode::Overwrite,
            max_integration_distance_m: 7.0,
        }
    }
}

impl FeatureFusionConfig {
    pub fn blend(alpha: f32) -> Self {
        Self {
            mode: FusionMode::Blend { alpha },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let FusionMode::Blend { alpha } = self.mode {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "blend alpha must lie in (0, 1], got {alpha}"
                )));
            }
        }
        if !(self.max_integration_distance_m > 0.0) {
            return Err(Error::InvalidConfig(
                "max_integration_distance_m must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FeatureStats {
    pub voxels_updated: usize,
    pub voxels_initialized: usize,
    pub blocks_allocated: usize,
}

/// Tolerated relative difference between horizontal and vertical scale of
/// the feature image with respect to the depth image.
const MAX_ANISOTROPY: f64 = 0.01;

/// Intrinsics of `features`, derived from the depth camera's intrinsics.
pub fn feature_intrinsics(depth_intrinsics: &Intrinsics, features: &FeatureImage) -> Result<Intrinsics> {
    let sx = features.width() as f64 / depth_intrinsics.width as f64;
    let sy = features.height() as f64 / depth_intrinsics.height as f64;
    if (sx - sy).abs() > MAX_ANISOTROPY * sx.max(sy) {
        return Err(Error::dims(
            "feature image aspect vs depth image",
            format!("scale of {}x{}", depth_intrinsics.width, depth_intrinsics.height),
            format!("{}x{}", features.width(), features.height()),
        ));
    }
    Ok(depth_intrinsics.scaled_to(features.width(), features.height()))
}

/// Fuses one feature image into `layer`.
///
/// `depth`, `pose` and `intrinsics` describe the depth frame that was just
/// integrated into `tsdf`; `intrinsics` are those of the depth image.
/// Voxel offset in its block and the feature pixel it samples.
type Candidate = (usize, (usize, usize));

pub fn integrate_feature_frame(
    layer: &mut FeatureLayer,
    tsdf: &TsdfLayer,
    features: &FeatureImage,
    depth: &DepthImage,
    pose: &Pose,
    intrinsics: &Intrinsics,
    config: &FeatureFusionConfig,
) -> Result<FeatureStats> {
    config.validate()?;
    check_depth_dims(depth, intrinsics)?;
    if layer.spec() != tsdf.spec() {
        return Err(Error::GridSpecMismatch);
    }
    if let Some(dim) = layer.feature_dim {
        if dim != features.channels() {
            return Err(Error::FeatureDimMismatch {
                expected: dim,
                actual: features.channels(),
            });
        }
    }
    let feat_k = feature_intrinsics(intrinsics, features)?;
    layer.feature_dim = Some(features.channels());

    let spec = *tsdf.spec();
    let cam_from_world = pose.inverse();
    let tau = spec.truncation_distance_m();
    let voxel_size = spec.voxel_size_m();
    let max_distance = config.max_integration_distance_m;

    let mut tsdf_blocks = tsdf.sorted_block_indices();
    let candidates: HashMap<BlockIndex, Vec<Candidate>> = tsdf_blocks
        .par_drain(..)
        .filter_map(|b| {
            let block = tsdf.block(&b)?;
            let hits: Vec<_> = block
                .voxels()
                .iter()
                .enumerate()
                .filter(|(_, t)| t.is_observed())
                .filter_map(|(i, _)| {
                    let g = GlobalIndex::join(b, VoxelIndex::from_linear(i));
                    let p_cam = cam_from_world.transform(&g.center(voxel_size));
                    let d = measured_depth(&p_cam, depth, intrinsics, max_distance)?;
                    if (p_cam.z - d).abs() > tau {
                        return None;
                    }
                    let (u, v) = feat_k.project_unchecked(&p_cam);
                    feat_k.nearest_pixel(u, v).map(|px| (i, px))
                })
                .collect();
            (!hits.is_empty()).then_some((b, hits))
        })
        .collect();

    let mut blocks_allocated = 0;
    for b in candidates.keys() {
        if layer.voxels.allocate_block(*b) {
            blocks_allocated += 1;
        }
    }

    let mode = config.mode;
    let (voxels_updated, voxels_initialized) = layer
        .voxels
        .blocks_mut()
        .par_iter_mut()
        .filter_map(|(b, block)| candidates.get(b).map(|hits| (block, hits)))
        .map(|(block, hits)| {
            let mut initialized = 0;
            for &(i, (col, row)) in hits {
                let voxel = &mut block.voxels_mut()[i];
                if !voxel.observed {
                    initialized += 1;
                }
                fuse(voxel, features.pixel(col, row), mode);
            }
            (hits.len(), initialized)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    Ok(FeatureStats {
        voxels_updated,
        voxels_initialized,
        blocks_allocated,
    })
}

/// Applies one observation to a voxel. The first observation is copied
/// verbatim in either mode.
#[inline]
pub fn fuse(voxel: &mut FeatureVoxel, observation: &[f32], mode: FusionMode) {
    if !voxel.observed {
        voxel.feature.clear();
        voxel.feature.extend_from_slice(observation);
        voxel.observed = true;
        return;
    }
    match mode {
        FusionMode::Overwrite => voxel.feature.copy_from_slice(observation),
        FusionMode::Blend { alpha } => {
            // Same as alpha * obs + (1 - alpha) * f, but leaves f unchanged
            // when obs == f.
            for (f, &obs) in voxel.feature.iter_mut().zip(observation) {
                *f += alpha * (obs - *f);
            }
        }
    }
}

/// Feature of the observed voxel whose center is nearest to `p`.
///
/// Candidates are the voxels within `max_radius_voxels` index steps of the
/// voxel containing `p` along every axis. Equal distances resolve to the
/// lexicographically smallest voxel index.
pub fn query_nearest_feature<'a>(
    layer: &'a FeatureLayer,
    p: &Point3<f64>,
    max_radius_voxels: u32,
) -> Option<&'a [f32]> {
    nearest_observed_voxel(layer, p, max_radius_voxels)
        .and_then(|g| layer.voxels.voxel(g))
        .map(|v| v.feature.as_slice())
}

pub fn nearest_observed_voxel(layer: &FeatureLayer, p: &Point3<f64>, max_radius_voxels: u32) -> Option<GlobalIndex> {
    let voxel_size = layer.spec().voxel_size_m();
    let origin = GlobalIndex::of_point(p, voxel_size);
    let r = max_radius_voxels as i64;
    let mut best: Option<(f64, GlobalIndex)> = None;
    // Lexicographic scan; strict comparison keeps the first of equal candidates.
    for dx in -r..=r {
        for dy in -r..=r {
            for dz in -r..=r {
                let g = origin.offset(dx, dy, dz);
                if !layer.voxels.voxel(g).is_some_and(|v| v.observed) {
                    continue;
                }
                let d2 = (g.center(voxel_size) - p).norm_squared();
                if best.is_none_or(|(bd, _)| d2 < bd) {
                    best = Some((d2, g));
                }
            }
        }
    }
    best.map(|(_, g)| g)
}
