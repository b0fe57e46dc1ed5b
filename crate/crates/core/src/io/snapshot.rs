//! Per-timestamp featurized vertex cloud files.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic         b"MMAP"
//! version       u32 (1)
//! voxel_size    f32 (meters)
//! feature_dim   u32
//! vertex_count  u64
//! points        f32 x (vertex_count * 3)
//! features      f32 x (vertex_count * feature_dim)
//! ```

use std::fs;
use std::path::Path;

use crate::cloud::FeaturePointCloud;
use crate::error::{Error, Result};
use crate::io::tensor::Reader;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"MMAP";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub voxel_size: f32,
    pub cloud: FeaturePointCloud,
}

impl Snapshot {
    pub fn new(voxel_size: f32, cloud: FeaturePointCloud) -> Self {
        Self { voxel_size, cloud }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.cloud;
        let mut out = Vec::with_capacity(24 + 4 * (c.len() * 3 + c.features().len()));
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.voxel_size.to_le_bytes());
        out.extend_from_slice(&(c.feature_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(c.len() as u64).to_le_bytes());
        for v in c.points().iter().flatten().chain(c.features()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader::new(bytes, path);
        if r.take(4)? != SNAPSHOT_MAGIC {
            return Err(Error::format(path, "not a snapshot file (bad magic)"));
        }
        let version = r.u32()?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::format(path, format!("unsupported snapshot version {version}")));
        }
        let voxel_size = r.f32()?;
        let feature_dim = r.u32()? as usize;
        let n = r.u64()? as usize;
        let floats = n
            .checked_mul(3 + feature_dim)
            .filter(|&f| f.checked_mul(4) == Some(bytes.len() - 24))
            .ok_or_else(|| {
                Error::format(
                    path,
                    format!(
                        "{n} vertices with {feature_dim} features do not match file size {}",
                        bytes.len()
                    ),
                )
            })?;
        let values: Vec<f32> = r
            .take(floats * 4)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let points = values[..n * 3].chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
        let features = values[n * 3..].to_vec();
        let cloud = FeaturePointCloud::from_parts(points, features, feature_dim)
            .map_err(|e| Error::format(path, e.to_string()))?;
        Ok(Self { voxel_size, cloud })
    }
}

pub fn save_snapshot(snapshot: &Snapshot, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, snapshot.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Snapshot::from_bytes(&bytes, path)
}
