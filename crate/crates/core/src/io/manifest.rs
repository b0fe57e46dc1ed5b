//! Posed RGB-D / feature sequences described by a JSON manifest.
//!
//! ```json
//! {
//!   "frames": [
//!     {
//!       "timestamp": 0.0,
//!       "depth_path": "depth_000000.ftns",
//!       "depth_format": "u16_millimeters",
//!       "color_path": "color_000000.ftns",
//!       "feature_path": null,
//!       "pose": [1, 0, 0, 0,  0, 1, 0, 0,  0, 0, 1, 0,  0, 0, 0, 1],
//!       "intrinsics": { "fx": 200, "fy": 200, "cx": 79.5, "cy": 59.5, "width": 160, "height": 120 }
//!     }
//!   ]
//! }
//! ```
//!
//! Paths are relative to the manifest's directory. `pose` is the
//! world-from-camera transform, row-major. Depth tensors are `[h, w]`, color
//! tensors `[h, w, 3]` (u16 holds 0-255 values, f32 holds 0-1 values) and
//! feature tensors `[h, w, f]` f32.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::{Intrinsics, Pose};
use crate::error::{Error, Result};
use crate::image::{ColorImage, ColorScale, DepthImage, FeatureImage};
use crate::io::tensor::{read_tensor, Tensor, TensorData};

/// Storage unit of a depth tensor; must agree with the tensor's dtype.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthFormat {
    /// f32 meters.
    F32Meters,
    /// u16 millimeters.
    U16Millimeters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub timestamp: f64,
    pub depth_path: PathBuf,
    pub depth_format: DepthFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_path: Option<PathBuf>,
    pub pose: Vec<f64>,
    pub intrinsics: Intrinsics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub frames: Vec<FrameRecord>,
}

/// A posed observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub timestamp: f64,
    pub depth: DepthImage,
    pub color: Option<ColorImage>,
    pub features: Option<FeatureImage>,
    pub pose: Pose,
    pub intrinsics: Intrinsics,
}

/// A validated manifest. Frames are read from disk on iteration.
#[derive(Debug, Clone)]
pub struct Sequence {
    manifest_path: PathBuf,
    base_dir: PathBuf,
    manifest: SequenceManifest,
    poses: Vec<Pose>,
}

/// Parses and validates the manifest at `manifest_path`.
pub fn load_sequence(manifest_path: impl AsRef<Path>) -> Result<Sequence> {
    let manifest_path = manifest_path.as_ref().to_path_buf();
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: SequenceManifest =
        serde_json::from_str(&text).map_err(|e| Error::format(&manifest_path, format!("malformed manifest: {e}")))?;
    let base_dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();

    let mut poses = Vec::with_capacity(manifest.frames.len());
    for (i, rec) in manifest.frames.iter().enumerate() {
        let ctx = |msg: String| Error::format(&manifest_path, format!("frame {i}: {msg}"));
        if !rec.timestamp.is_finite() {
            return Err(ctx("non-finite timestamp".into()));
        }
        if i > 0 && !(rec.timestamp > manifest.frames[i - 1].timestamp) {
            return Err(Error::Ordering(format!(
                "{}: frame {i} timestamp {} does not follow {}",
                manifest_path.display(),
                rec.timestamp,
                manifest.frames[i - 1].timestamp
            )));
        }
        rec.intrinsics.validate().map_err(|e| ctx(e.to_string()))?;
        poses.push(Pose::from_row_major(&rec.pose).map_err(|e| ctx(e.to_string()))?);
        let paths = [
            Some(&rec.depth_path),
            rec.color_path.as_ref(),
            rec.feature_path.as_ref(),
        ];
        for p in paths.into_iter().flatten() {
            let full = base_dir.join(p);
            if !full.is_file() {
                return Err(Error::io(
                    full,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file does not exist"),
                ));
            }
        }
    }
    Ok(Sequence {
        manifest_path,
        base_dir,
        manifest,
        poses,
    })
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.manifest.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.frames.is_empty()
    }

    pub fn manifest(&self) -> &SequenceManifest {
        &self.manifest
    }

    pub fn manifest_path(&self) -> &Path {
        &self.manifest_path
    }

    /// Reads frame `i` from disk.
    pub fn frame(&self, i: usize) -> Result<Frame> {
        let rec = &self.manifest.frames[i];
        let k = rec.intrinsics;
        let depth_path = self.base_dir.join(&rec.depth_path);
        let depth = load_depth(&depth_path, rec.depth_format, &k)?;
        let color = rec
            .color_path
            .as_ref()
            .map(|p| load_color(&self.base_dir.join(p), &k))
            .transpose()?;
        let features = rec
            .feature_path
            .as_ref()
            .map(|p| load_features(&self.base_dir.join(p)))
            .transpose()?;
        Ok(Frame {
            timestamp: rec.timestamp,
            depth,
            color,
            features,
            pose: self.poses[i],
            intrinsics: k,
        })
    }

    /// Frames in timestamp order.
    pub fn frames(&self) -> impl Iterator<Item = Result<Frame>> + '_ {
        (0..self.len()).map(move |i| self.frame(i))
    }
}

fn expect_dims(path: &Path, tensor: &Tensor, expected: &[u64], what: &str) -> Result<()> {
    if tensor.dims != expected {
        return Err(Error::format(
            path,
            format!("{what} dims {:?} do not match expected {:?}", tensor.dims, expected),
        ));
    }
    Ok(())
}

fn load_depth(path: &Path, format: DepthFormat, k: &Intrinsics) -> Result<DepthImage> {
    let t = read_tensor(path)?;
    expect_dims(path, &t, &[k.height as u64, k.width as u64], "depth")?;
    let data = match (format, t.data) {
        (DepthFormat::F32Meters, TensorData::F32(v)) => v,
        (DepthFormat::U16Millimeters, TensorData::U16(v)) => v.into_iter().map(|mm| mm as f32 / 1000.0).collect(),
        (declared, data) => {
            return Err(Error::format(
                path,
                format!("declared {declared:?} but tensor dtype is {}", data.dtype_name()),
            ))
        }
    };
    DepthImage::new(k.width, k.height, data).map_err(|e| Error::format(path, e.to_string()))
}

fn load_color(path: &Path, k: &Intrinsics) -> Result<ColorImage> {
    let t = read_tensor(path)?;
    expect_dims(path, &t, &[k.height as u64, k.width as u64, 3], "color")?;
    let (scale, data) = match t.data {
        TensorData::U16(v) => (ColorScale::Byte, v.into_iter().map(f32::from).collect()),
        TensorData::F32(v) => (ColorScale::Unit, v),
    };
    ColorImage::new(k.width, k.height, 3, scale, data).map_err(|e| Error::format(path, e.to_string()))
}

fn load_features(path: &Path) -> Result<FeatureImage> {
    let t = read_tensor(path)?;
    let [h, w, f] = t.dims[..] else {
        return Err(Error::format(
            path,
            format!("feature tensor must be [h, w, f], got {:?}", t.dims),
        ));
    };
    let TensorData::F32(data) = t.data else {
        return Err(Error::format(path, "feature tensor must be f32"));
    };
    FeatureImage::new(w as usize, h as usize, f as usize, data).map_err(|e| Error::format(path, e.to_string()))
}
