//! Analytic scenes rendered to depth, color and feature images, plus an
//! on-disk sequence writer. Used by tests, examples and the CLI fixtures.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};

use crate::camera::{Intrinsics, Pose};
use crate::error::{Error, Result};
use crate::image::{ColorImage, ColorScale, DepthImage, FeatureImage};
use crate::io::manifest::{DepthFormat, FrameRecord, SequenceManifest};
use crate::io::tensor::{write_tensor, Tensor};

/// World-frame ray through the center of pixel `(col, row)`, scaled so that
/// a step of `t` advances `t` along the camera's optical axis.
fn pixel_ray(pose: &Pose, k: &Intrinsics, col: usize, row: usize) -> (Point3<f64>, Vector3<f64>) {
    let dir_cam = Vector3::new((col as f64 - k.cx) / k.fx, (row as f64 - k.cy) / k.fy, 1.0);
    (Point3::from(*pose.translation()), pose.rotation() * dir_cam)
}

/// Depth (along camera +Z) of the nearest ray-sphere intersection in front
/// of the camera.
pub fn sphere_hit_depth(
    center: &Point3<f64>,
    radius: f64,
    pose: &Pose,
    k: &Intrinsics,
    col: usize,
    row: usize,
) -> Option<f64> {
    let (o, d) = pixel_ray(pose, k, col, row);
    let oc = o - center;
    let a = d.norm_squared();
    let b = 2.0 * oc.dot(&d);
    let c = oc.norm_squared() - radius * radius;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = (-b - sq) / (2.0 * a);
    let t1 = (-b + sq) / (2.0 * a);
    [t0, t1].into_iter().find(|&t| t > 0.0)
}

/// Depth image of a sphere; pixels whose rays miss it are invalid (0).
pub fn analytic_sphere_depth(center: &Point3<f64>, radius: f64, pose: &Pose, k: &Intrinsics) -> DepthImage {
    let mut data = vec![0.0f32; k.width * k.height];
    for row in 0..k.height {
        for col in 0..k.width {
            if let Some(t) = sphere_hit_depth(center, radius, pose, k, col, row) {
                data[row * k.width + col] = t as f32;
            }
        }
    }
    DepthImage::new(k.width, k.height, data).expect("analytic depth is finite and non-negative")
}

/// Depth image of the plane through `point` with normal `normal`.
pub fn analytic_plane_depth(point: &Point3<f64>, normal: &Vector3<f64>, pose: &Pose, k: &Intrinsics) -> DepthImage {
    let mut data = vec![0.0f32; k.width * k.height];
    for row in 0..k.height {
        for col in 0..k.width {
            let (o, d) = pixel_ray(pose, k, col, row);
            let denom = normal.dot(&d);
            if denom.abs() < 1e-12 {
                continue;
            }
            let t = normal.dot(&(point - o)) / denom;
            if t > 0.0 {
                data[row * k.width + col] = t as f32;
            }
        }
    }
    DepthImage::new(k.width, k.height, data).expect("analytic depth is finite and non-negative")
}

/// Color of the two-tone sphere: red where `x < center.x`, blue elsewhere.
fn two_tone(hit: &Point3<f64>, center: &Point3<f64>) -> [f32; 3] {
    if hit.x < center.x {
        [255.0, 0.0, 0.0]
    } else {
        [0.0, 0.0, 255.0]
    }
}

/// Byte-range color image of a sphere painted red on its `-x` half and blue
/// on its `+x` half, on a black background.
pub fn two_tone_sphere_color(center: &Point3<f64>, radius: f64, pose: &Pose, k: &Intrinsics) -> ColorImage {
    let mut data = vec![0.0f32; k.width * k.height * 3];
    for row in 0..k.height {
        for col in 0..k.width {
            if let Some(t) = sphere_hit_depth(center, radius, pose, k, col, row) {
                let (o, d) = pixel_ray(pose, k, col, row);
                let rgb = two_tone(&(o + d * t), center);
                data[(row * k.width + col) * 3..][..3].copy_from_slice(&rgb);
            }
        }
    }
    ColorImage::new(k.width, k.height, 3, ColorScale::Byte, data).expect("colors are in byte range")
}

/// Feature image whose pixels hold `f(hit point)` for rays hitting the
/// sphere and zeros elsewhere.
pub fn sphere_feature_image(
    center: &Point3<f64>,
    radius: f64,
    pose: &Pose,
    k: &Intrinsics,
    channels: usize,
    f: impl Fn(&Point3<f64>) -> Vec<f32>,
) -> FeatureImage {
    let mut data = vec![0.0f32; k.width * k.height * channels];
    for row in 0..k.height {
        for col in 0..k.width {
            if let Some(t) = sphere_hit_depth(center, radius, pose, k, col, row) {
                let (o, d) = pixel_ray(pose, k, col, row);
                let v = f(&(o + d * t));
                data[(row * k.width + col) * channels..][..channels].copy_from_slice(&v[..channels]);
            }
        }
    }
    FeatureImage::new(k.width, k.height, channels, data).expect("feature values are finite")
}

/// `n` cameras spread over a sphere of radius `distance` around `target`,
/// all looking at it.
pub fn orbit_poses(target: &Point3<f64>, distance: f64, n: usize) -> Vec<Pose> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            // Fibonacci lattice, skipping the exact poles.
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let dir = Vector3::new(r * phi.cos(), r * phi.sin(), z);
            let up = if z.abs() > 0.99 { Vector3::x() } else { Vector3::z() };
            Pose::look_at(target + dir * distance, *target, up).expect("orbit poses are well formed")
        })
        .collect()
}

/// Options for [`write_sphere_sequence`].
#[derive(Debug, Clone)]
pub struct SphereSequence {
    pub center: Point3<f64>,
    pub radius: f64,
    pub camera_distance: f64,
    pub frames: usize,
    pub intrinsics: Intrinsics,
    pub depth_format: DepthFormat,
    pub with_color: bool,
    /// Writes a 4-channel feature image holding the unit surface normal and
    /// a constant 1; the feature image is half the depth resolution.
    pub with_features: bool,
}

impl Default for SphereSequence {
    fn default() -> Self {
        Self {
            center: Point3::new(0.0, 0.0, 0.0),
            radius: 0.2,
            camera_distance: 0.8,
            frames: 3,
            intrinsics: Intrinsics::new(120.0, 120.0, 47.5, 35.5, 96, 72).expect("valid intrinsics"),
            depth_format: DepthFormat::U16Millimeters,
            with_color: true,
            with_features: false,
        }
    }
}

/// Writes tensors and a `manifest.json` for a two-tone sphere seen from an
/// orbit into `dir`; returns the manifest path.
pub fn write_sphere_sequence(dir: impl AsRef<Path>, opts: &SphereSequence) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let k = opts.intrinsics;
    let hw = [k.height as u64, k.width as u64];
    let mut frames = Vec::with_capacity(opts.frames);
    for (i, pose) in orbit_poses(&opts.center, opts.camera_distance, opts.frames)
        .iter()
        .enumerate()
    {
        let depth = analytic_sphere_depth(&opts.center, opts.radius, pose, &k);
        let depth_path = PathBuf::from(format!("depth_{i:06}.ftns"));
        let tensor = match opts.depth_format {
            DepthFormat::F32Meters => Tensor::f32(hw.to_vec(), depth.data().to_vec())?,
            DepthFormat::U16Millimeters => Tensor::u16(
                hw.to_vec(),
                depth.data().iter().map(|d| (d * 1000.0).round() as u16).collect(),
            )?,
        };
        write_tensor(dir.join(&depth_path), &tensor)?;

        let color_path = if opts.with_color {
            let color = two_tone_sphere_color(&opts.center, opts.radius, pose, &k);
            let p = PathBuf::from(format!("color_{i:06}.ftns"));
            let bytes = color.data().iter().map(|&v| v as u16).collect();
            write_tensor(dir.join(&p), &Tensor::u16(vec![hw[0], hw[1], 3], bytes)?)?;
            Some(p)
        } else {
            None
        };

        let feature_path = if opts.with_features {
            let fk = k.scaled_to(k.width / 2, k.height / 2);
            let center = opts.center;
            let feats = sphere_feature_image(&opts.center, opts.radius, pose, &fk, 4, |p| {
                let n = (p - center).normalize();
                vec![n.x as f32, n.y as f32, n.z as f32, 1.0]
            });
            let p = PathBuf::from(format!("features_{i:06}.ftns"));
            let dims = vec![fk.height as u64, fk.width as u64, 4];
            write_tensor(dir.join(&p), &Tensor::f32(dims, feats.data().to_vec())?)?;
            Some(p)
        } else {
            None
        };

        frames.push(FrameRecord {
            timestamp: i as f64 * 0.1,
            depth_path,
            depth_format: opts.depth_format,
            color_path,
            feature_path,
            pose: pose.to_row_major().to_vec(),
            intrinsics: k,
        });
    }
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&SequenceManifest { frames })
        .map_err(|e| Error::format(&manifest_path, e.to_string()))?;
    fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}
