//! Batch operations behind the command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feature_tools::rgb_feature_extractor;
use crate::io::manifest::Sequence;
use crate::io::snapshot::{save_snapshot, Snapshot};
use crate::mapper::{Mapper, MapperConfig};

/// Name of the snapshot written after the last frame.
pub const FINAL_SNAPSHOT: &str = "snapshot_final.bin";

pub fn snapshot_name(frame: usize) -> String {
    format!("snapshot_{frame:06}.bin")
}

#[derive(Debug, Clone)]
pub struct ReconstructOptions {
    pub mapper: MapperConfig,
    /// Write a snapshot after every `k` frames.
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructReport {
    pub frames: usize,
    pub blocks: usize,
    pub vertices: usize,
    pub dropped_vertices: usize,
    pub feature_dim: usize,
    pub final_snapshot: PathBuf,
    pub snapshots: Vec<PathBuf>,
}

/// Fuses every frame of `sequence`, writing per-timestamp snapshots on the
/// requested cadence and a final snapshot into `out_dir`.
///
/// A frame's feature image is used when present; otherwise its color image
/// is converted to normalized RGB features; frames with neither contribute
/// geometry only.
pub fn reconstruct(sequence: &Sequence, options: &ReconstructOptions, out_dir: &Path) -> Result<ReconstructReport> {
    if options.snapshot_every == Some(0) {
        return Err(Error::InvalidConfig("snapshot interval must be at least 1".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut mapper = Mapper::with_config(options.mapper.clone())?;
    let voxel_size = options.mapper.voxel_size_m as f32;
    let mut snapshots = Vec::new();

    for (i, frame) in sequence.frames().enumerate() {
        let frame = frame?;
        mapper.add_depth_frame(&frame.depth, &frame.pose, &frame.intrinsics)?;
        let features = match (frame.features, &frame.color) {
            (Some(f), _) => Some(f),
            (None, Some(color)) => Some(rgb_feature_extractor(color, true)?),
            (None, None) => None,
        };
        if let Some(features) = features {
            mapper.add_feature_frame(&features, &frame.pose, &frame.intrinsics)?;
        }
        if let Some(k) = options.snapshot_every {
            if (i + 1) % k == 0 {
                mapper.update_feature_mesh()?;
                let path = out_dir.join(snapshot_name(i));
                save_snapshot(&Snapshot::new(voxel_size, mapper.get_feature_mesh().clone()), &path)?;
                snapshots.push(path);
            }
        }
    }

    let stats = mapper.update_feature_mesh()?;
    let final_snapshot = out_dir.join(FINAL_SNAPSHOT);
    let mesh = mapper.get_feature_mesh();
    save_snapshot(&Snapshot::new(voxel_size, mesh.clone()), &final_snapshot)?;
    Ok(ReconstructReport {
        frames: mapper.frames_integrated(),
        blocks: mapper.tsdf_layer().num_blocks(),
        vertices: mesh.len(),
        dropped_vertices: stats.vertices_dropped,
        feature_dim: mesh.feature_dim(),
        final_snapshot,
        snapshots,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundingBox {
    pub min: [f32; 3],
    pub max: [f32; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotStats {
    pub vertices: usize,
    pub feature_dim: usize,
    pub voxel_size: f32,
    pub bounding_box: Option<BoundingBox>,
}

pub fn snapshot_stats(snapshot: &Snapshot) -> SnapshotStats {
    SnapshotStats {
        vertices: snapshot.cloud.len(),
        feature_dim: snapshot.cloud.feature_dim(),
        voxel_size: snapshot.voxel_size,
        bounding_box: snapshot.cloud.bounding_box().map(|(min, max)| BoundingBox { min, max }),
    }
}

/// Feature of the snapshot vertex nearest to `point`, searching within
/// `radius_voxels` voxel lengths.
pub fn query_snapshot(snapshot: &Snapshot, point: &Point3<f64>, radius_voxels: u32) -> Option<Vec<f32>> {
    let radius = radius_voxels as f64 * snapshot.voxel_size as f64;
    snapshot
        .cloud
        .nearest_within(point, radius)
        .map(|i| snapshot.cloud.feature(i).to_vec())
}
