//! Binary little-endian PLY export of point clouds.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::cloud::FeaturePointCloud;
use crate::error::{Error, Result};

/// Serializes `cloud` as a PLY vertex list. `colors`, when given, holds one
/// RGB triple in `[0, 1]` per point and is written as `uchar` channels.
pub fn write_ply<W: Write>(out: &mut W, cloud: &FeaturePointCloud, colors: Option<&[[f32; 3]]>) -> std::io::Result<()> {
    write!(
        out,
        "ply\nformat binary_little_endian 1.0\ncomment featurized surface vertices\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n",
        cloud.len()
    )?;
    if colors.is_some() {
        write!(out, "property uchar red\nproperty uchar green\nproperty uchar blue\n")?;
    }
    writeln!(out, "end_header")?;
    for (i, p) in cloud.points().iter().enumerate() {
        for v in p {
            out.write_all(&v.to_le_bytes())?;
        }
        if let Some(colors) = colors {
            let rgb = colors[i].map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8);
            out.write_all(&rgb)?;
        }
    }
    Ok(())
}

pub fn export_ply(cloud: &FeaturePointCloud, colors: Option<&[[f32; 3]]>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(c) = colors {
        if c.len() != cloud.len() {
            return Err(Error::dims("PLY colors", cloud.len(), c.len()));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_ply(&mut w, cloud, colors)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
