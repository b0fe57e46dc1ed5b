//! Projective TSDF integration of posed depth images.
//!
//! The distance assigned to a voxel is its depth gap to the measured surface
//! along the camera axis, `d - z`. By default that gap is scaled by the
//! incidence factor of the pixel, `|n . r|` where `n` is the unit surface
//! normal estimated from the depth image and `r = ((u - cx)/fx, (v - cy)/fy, 1)`,
//! which turns it into the distance to the local tangent plane. Without it,
//! surfaces seen at grazing angles inflate the field by `1/cos` of the
//! incidence angle. The behind-surface cutoff always applies to the raw gap.

use std::collections::HashSet;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::camera::{Intrinsics, Pose};
use crate::error::{Error, Result};
use crate::grid::{BlockIndex, GlobalIndex, GridSpec, VoxelIndex, VoxelLayer};
use crate::image::DepthImage;

/// Truncated signed distance and accumulated weight.
///
/// `weight == 0` marks an unobserved voxel; its distance carries no meaning.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TsdfVoxel {
    pub distance: f32,
    pub weight: f32,
}

impl TsdfVoxel {
    #[inline]
    pub fn is_observed(&self) -> bool {
        self.weight > 0.0
    }
}

pub type TsdfLayer = VoxelLayer<TsdfVoxel>;

/// How much a single measurement counts in the running average.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum WeightPolicy {
    /// Every measurement has weight 1.
    #[default]
    Constant,
}

impl WeightPolicy {
    #[inline]
    fn weight(self) -> f32 {
        match self {
            WeightPolicy::Constant => 1.0,
        }
    }
}

/// Which signed distance a measurement contributes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DistanceMode {
    /// Raw depth gap `d - z`.
    Projective,
    /// Depth gap scaled by the pixel's incidence factor.
    #[default]
    TangentPlane,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsdfConfig {
    /// Cap on the accumulated weight of a voxel.
    pub max_weight: f32,
    /// Depth readings beyond this distance are ignored.
    pub max_integration_distance_m: f64,
    pub weight_policy: WeightPolicy,
    pub distance_mode: DistanceMode,
}

impl Default for TsdfConfig {
    fn default() -> Self {
        Self {
            max_weight: 100.0,
            max_integration_distance_m: 7.0,
            weight_policy: WeightPolicy::Constant,
            distance_mode: DistanceMode::TangentPlane,
        }
    }
}

impl TsdfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_weight >= 1.0) || !self.max_weight.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "max_weight must be >= 1, got {}",
                self.max_weight
            )));
        }
        if !(self.max_integration_distance_m > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "max_integration_distance_m must be positive, got {}",
                self.max_integration_distance_m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub voxels_updated: usize,
    pub blocks_allocated: usize,
}

pub(crate) fn check_depth_dims(depth: &DepthImage, intrinsics: &Intrinsics) -> Result<()> {
    intrinsics.validate()?;
    if depth.width() != intrinsics.width || depth.height() != intrinsics.height {
        return Err(Error::dims(
            "depth image vs intrinsics",
            format!("{}x{}", intrinsics.width, intrinsics.height),
            format!("{}x{}", depth.width(), depth.height()),
        ));
    }
    Ok(())
}

/// Pixel a camera-frame point projects to and its depth reading, if valid.
#[inline]
pub(crate) fn measured_pixel(
    p_cam: &Point3<f64>,
    depth: &DepthImage,
    intrinsics: &Intrinsics,
    max_distance: f64,
) -> Option<(usize, usize, f64)> {
    if !(p_cam.z > 0.0) {
        return None;
    }
    let (u, v) = intrinsics.project_unchecked(p_cam);
    let (col, row) = intrinsics.nearest_pixel(u, v)?;
    let d = depth.get(col, row) as f64;
    (d > 0.0 && d <= max_distance).then_some((col, row, d))
}

/// Depth reading at the pixel a camera-frame point projects to, if valid.
#[inline]
pub(crate) fn measured_depth(
    p_cam: &Point3<f64>,
    depth: &DepthImage,
    intrinsics: &Intrinsics,
    max_distance: f64,
) -> Option<f64> {
    measured_pixel(p_cam, depth, intrinsics, max_distance).map(|(_, _, d)| d)
}

/// Camera-frame point seen at a pixel, if its depth is valid.
fn pixel_point(depth: &DepthImage, k: &Intrinsics, col: usize, row: usize, max_distance: f64) -> Option<Vector3<f64>> {
    let d = depth.get(col, row) as f64;
    (d > 0.0 && d <= max_distance)
        .then(|| Vector3::new((col as f64 - k.cx) / k.fx * d, (row as f64 - k.cy) / k.fy * d, d))
}

/// Difference to the valid neighbor along one image axis, preferring the
/// side with the smaller depth change so that edges do not leak into the
/// estimate.
fn neighbor_difference(
    p: &Vector3<f64>,
    before: Option<Vector3<f64>>,
    after: Option<Vector3<f64>>,
) -> Option<Vector3<f64>> {
    match (before, after) {
        (Some(b), Some(a)) => {
            if (a.z - p.z).abs() <= (p.z - b.z).abs() {
                Some(a - p)
            } else {
                Some(p - b)
            }
        }
        (None, Some(a)) => Some(a - p),
        (Some(b), None) => Some(p - b),
        (None, None) => None,
    }
}

/// Per-pixel factor `|n . r|` converting a depth gap into a tangent-plane
/// distance. Pixels whose normal cannot be estimated get 1.
pub fn incidence_factors(depth: &DepthImage, intrinsics: &Intrinsics, max_distance: f64) -> Vec<f64> {
    let (w, h) = (depth.width(), depth.height());
    let at = |col: usize, row: usize| pixel_point(depth, intrinsics, col, row, max_distance);
    (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (col, row) = (i % w, i / w);
            let Some(p) = at(col, row) else {
                return 1.0;
            };
            let left = col.checked_sub(1).and_then(|c| at(c, row));
            let right = (col + 1 < w).then(|| at(col + 1, row)).flatten();
            let up = row.checked_sub(1).and_then(|r| at(col, r));
            let down = (row + 1 < h).then(|| at(col, row + 1)).flatten();
            let (Some(du), Some(dv)) = (neighbor_difference(&p, left, right), neighbor_difference(&p, up, down)) else {
                return 1.0;
            };
            let n = du.cross(&dv);
            let norm = n.norm();
            if !(norm > 0.0) {
                return 1.0;
            }
            (n.dot(&p) / (norm * p.z)).abs()
        })
        .collect()
}

/// Fuses one depth frame into `layer`.
///
/// Blocks crossed by the truncation band of any valid measurement are
/// allocated first. Then every allocated voxel that projects onto a valid
/// depth pixel and whose depth gap is not more than one truncation distance
/// behind the measured surface receives the running-average update.
pub fn integrate_depth_frame(
    layer: &mut TsdfLayer,
    depth: &DepthImage,
    pose: &Pose,
    intrinsics: &Intrinsics,
    config: &TsdfConfig,
) -> Result<IntegrationStats> {
    config.validate()?;
    check_depth_dims(depth, intrinsics)?;
    let spec = *layer.spec();

    let mut blocks_allocated = 0;
    for block in blocks_in_band(depth, pose, intrinsics, &spec, config.max_integration_distance_m) {
        if layer.allocate_block(block) {
            blocks_allocated += 1;
        }
    }

    let cam_from_world = pose.inverse();
    let tau = spec.truncation_distance_m();
    let tau_f32 = tau as f32;
    let voxel_size = spec.voxel_size_m();
    let max_distance = config.max_integration_distance_m;
    let w = config.weight_policy.weight();
    let max_weight = config.max_weight;
    let block_radius = spec.block_size_m() * 3f64.sqrt() * 0.5;
    let factors = match config.distance_mode {
        DistanceMode::Projective => None,
        DistanceMode::TangentPlane => Some(incidence_factors(depth, intrinsics, max_distance)),
    };
    let width = depth.width();

    let voxels_updated = layer
        .blocks_mut()
        .par_iter_mut()
        .map(|(index, block)| {
            let center = block_center(index, &spec);
            let c_cam = cam_from_world.transform(&center);
            if c_cam.z + block_radius <= 0.0 || c_cam.z - block_radius > max_distance + tau {
                return 0;
            }
            let mut updated = 0;
            for (i, voxel) in block.voxels_mut().iter_mut().enumerate() {
                let g = GlobalIndex::join(*index, VoxelIndex::from_linear(i));
                let p_cam = cam_from_world.transform(&g.center(voxel_size));
                let Some((col, row, d)) = measured_pixel(&p_cam, depth, intrinsics, max_distance) else {
                    continue;
                };
                let gap = d - p_cam.z;
                if gap < -tau {
                    continue;
                }
                let sdf = match &factors {
                    Some(f) => gap * f[row * width + col],
                    None => gap,
                };
                let sdf = sdf.clamp(-tau, tau) as f32;
                let total = voxel.weight + w;
                let fused = (voxel.weight * voxel.distance + w * sdf) / total;
                voxel.distance = fused.clamp(-tau_f32, tau_f32);
                voxel.weight = total.min(max_weight);
                updated += 1;
            }
            updated
        })
        .sum();

    Ok(IntegrationStats {
        voxels_updated,
        blocks_allocated,
    })
}

fn block_center(index: &BlockIndex, spec: &GridSpec) -> Point3<f64> {
    let s = spec.block_size_m();
    Point3::new(
        (index.x as f64 + 0.5) * s,
        (index.y as f64 + 0.5) * s,
        (index.z as f64 + 0.5) * s,
    )
}

/// Blocks crossed by the segment `[d - tau, d + tau]` along each valid
/// pixel ray, sorted.
pub(crate) fn blocks_in_band(
    depth: &DepthImage,
    pose: &Pose,
    intrinsics: &Intrinsics,
    spec: &GridSpec,
    max_distance: f64,
) -> Vec<BlockIndex> {
    let tau = spec.truncation_distance_m();
    let block_size = spec.block_size_m();
    let rows: Vec<HashSet<BlockIndex>> = (0..depth.height())
        .into_par_iter()
        .map(|row| {
            let mut set = HashSet::new();
            for col in 0..depth.width() {
                let d = depth.get(col, row) as f64;
                if !(d > 0.0 && d <= max_distance) {
                    continue;
                }
                let near = (d - tau).max(d * 1e-3);
                let (u, v) = (col as f64, row as f64);
                // Unprojection cannot fail: both depths are positive.
                let a = pose.transform(&intrinsics.unproject(u, v, near).unwrap());
                let b = pose.transform(&intrinsics.unproject(u, v, d + tau).unwrap());
                traverse_blocks(&a, &b, block_size, &mut set);
            }
            set
        })
        .collect();
    let mut all: Vec<BlockIndex> = rows.into_iter().flatten().collect::<HashSet<_>>().into_iter().collect();
    all.sort_unstable();
    all
}

/// Inserts every block cell the segment `a -> b` passes through
/// (grid traversal in block units).
fn traverse_blocks(a: &Point3<f64>, b: &Point3<f64>, block_size: f64, out: &mut HashSet<BlockIndex>) {
    let start = a.coords / block_size;
    let end = b.coords / block_size;
    let mut cell = [start.x.floor() as i64, start.y.floor() as i64, start.z.floor() as i64];
    let last = [end.x.floor() as i64, end.y.floor() as i64, end.z.floor() as i64];
    let dir = end - start;
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for axis in 0..3 {
        if dir[axis] > 0.0 {
            step[axis] = 1;
            t_max[axis] = ((cell[axis] + 1) as f64 - start[axis]) / dir[axis];
            t_delta[axis] = 1.0 / dir[axis];
        } else if dir[axis] < 0.0 {
            step[axis] = -1;
            t_max[axis] = (cell[axis] as f64 - start[axis]) / dir[axis];
            t_delta[axis] = -1.0 / dir[axis];
        }
    }
    out.insert(BlockIndex::new(cell[0], cell[1], cell[2]));
    // Bounded by the Manhattan distance between the end cells.
    let max_steps = (0..3).map(|i| (last[i] - cell[i]).unsigned_abs()).sum::<u64>();
    for _ in 0..max_steps {
        let axis = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
            0
        } else if t_max[1] <= t_max[2] {
            1
        } else {
            2
        };
        if t_max[axis] > 1.0 {
            break;
        }
        cell[axis] += step[axis];
        t_max[axis] += t_delta[axis];
        out.insert(BlockIndex::new(cell[0], cell[1], cell[2]));
    }
    out.insert(BlockIndex::new(last[0], last[1], last[2]));
}
