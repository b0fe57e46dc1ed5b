#![allow(dead_code)]

//! Independent reference implementations and fixtures shared by the
//! integration and acceptance tests. The oracles loop over every voxel of a
//! small dense grid and scan every pixel for the one the voxel falls into,
//! without touching the block store, band traversal or parallel code paths.

use feature_tsdf::synthetic::{analytic_sphere_depth, orbit_poses, sphere_feature_image};
use feature_tsdf::*;
use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const N: i64 = 16;
pub const VOXEL: f64 = 0.01;
pub const TRUNC_VOXELS: u32 = 4;

pub fn spec() -> GridSpec {
    GridSpec::new(VOXEL, TRUNC_VOXELS).unwrap()
}

pub fn grid_indices() -> impl Iterator<Item = GlobalIndex> {
    (0..N).flat_map(|x| (0..N).flat_map(move |y| (0..N).map(move |z| GlobalIndex([x, y, z]))))
}

fn flat(g: GlobalIndex) -> usize {
    ((g.0[0] * N + g.0[1]) * N + g.0[2]) as usize
}

/// Camera-frame coordinates of a world point.
pub fn to_camera(pose: &Pose, p: &Point3<f64>) -> Point3<f64> {
    let rt = pose.rotation().transpose();
    Point3::from(rt * p.coords - rt * pose.translation())
}

/// Pixel whose `[i - 0.5, i + 0.5)` square contains the projection, found
/// by scanning the whole image.
pub fn scan_pixel(k: &Intrinsics, p_cam: &Point3<f64>) -> Option<(usize, usize)> {
    if p_cam.z <= 0.0 || p_cam.z.is_nan() {
        return None;
    }
    let u = k.fx * p_cam.x / p_cam.z + k.cx;
    let v = k.fy * p_cam.y / p_cam.z + k.cy;
    let mut found = None;
    for row in 0..k.height {
        for col in 0..k.width {
            let (c, r) = (col as f64, row as f64);
            if u + 0.5 >= c && u + 0.5 < c + 1.0 && v + 0.5 >= r && v + 0.5 < r + 1.0 {
                assert!(found.is_none(), "pixel squares overlap");
                found = Some((col, row));
            }
        }
    }
    found
}

fn pixel_point(depth: &DepthImage, k: &Intrinsics, col: usize, row: usize) -> Option<Vector3<f64>> {
    let d = depth.get(col, row) as f64;
    (d > 0.0 && d <= 7.0).then(|| Vector3::new((col as f64 - k.cx) / k.fx * d, (row as f64 - k.cy) / k.fy * d, d))
}

fn side(p: &Vector3<f64>, before: Option<Vector3<f64>>, after: Option<Vector3<f64>>) -> Option<Vector3<f64>> {
    match (before, after) {
        (Some(b), Some(a)) if (a.z - p.z).abs() <= (p.z - b.z).abs() => Some(a - p),
        (Some(b), _) => Some(p - b),
        (None, Some(a)) => Some(a - p),
        (None, None) => None,
    }
}

/// `|n . r|` for one pixel, 1 when the normal is unavailable.
pub fn incidence(depth: &DepthImage, k: &Intrinsics, col: usize, row: usize) -> f64 {
    let Some(p) = pixel_point(depth, k, col, row) else {
        return 1.0;
    };
    let get = |c: i64, r: i64| {
        (c >= 0 && r >= 0 && (c as usize) < k.width && (r as usize) < k.height)
            .then(|| pixel_point(depth, k, c as usize, r as usize))
            .flatten()
    };
    let (c, r) = (col as i64, row as i64);
    match (
        side(&p, get(c - 1, r), get(c + 1, r)),
        side(&p, get(c, r - 1), get(c, r + 1)),
    ) {
        (Some(du), Some(dv)) => {
            let n = du.cross(&dv);
            let norm = n.norm();
            if norm > 0.0 {
                (n.dot(&p) / (norm * p.z)).abs()
            } else {
                1.0
            }
        }
        _ => 1.0,
    }
}

/// Dense 16^3 reference TSDF.
pub struct OracleTsdf {
    pub voxels: Vec<TsdfVoxel>,
    pub mode: DistanceMode,
}

impl OracleTsdf {
    pub fn new(mode: DistanceMode) -> Self {
        Self {
            voxels: vec![TsdfVoxel::default(); (N * N * N) as usize],
            mode,
        }
    }

    pub fn get(&self, g: GlobalIndex) -> TsdfVoxel {
        self.voxels[flat(g)]
    }

    pub fn integrate(&mut self, depth: &DepthImage, pose: &Pose, k: &Intrinsics) {
        let tau = VOXEL * TRUNC_VOXELS as f64;
        for g in grid_indices() {
            let p_cam = to_camera(pose, &g.center(VOXEL));
            let Some((col, row)) = scan_pixel(k, &p_cam) else {
                continue;
            };
            let d = depth.get(col, row) as f64;
            if !(d > 0.0 && d <= 7.0) {
                continue;
            }
            let gap = d - p_cam.z;
            if gap < -tau {
                continue;
            }
            let factor = match self.mode {
                DistanceMode::Projective => 1.0,
                DistanceMode::TangentPlane => incidence(depth, k, col, row),
            };
            let m = (gap * factor).clamp(-tau, tau) as f32;
            let v = &mut self.voxels[flat(g)];
            let total = v.weight + 1.0;
            v.distance = ((v.weight * v.distance + 1.0 * m) / total).clamp(-tau as f32, tau as f32);
            v.weight = total.min(100.0);
        }
    }
}

/// Dense 16^3 reference feature grid.
pub struct OracleFeatures {
    pub voxels: Vec<Option<Vec<f32>>>,
    pub mode: FusionMode,
}

impl OracleFeatures {
    pub fn new(mode: FusionMode) -> Self {
        Self {
            voxels: vec![None; (N * N * N) as usize],
            mode,
        }
    }

    pub fn get(&self, g: GlobalIndex) -> Option<&Vec<f32>> {
        self.voxels[flat(g)].as_ref()
    }

    pub fn integrate(
        &mut self,
        tsdf: &OracleTsdf,
        feats: &FeatureImage,
        depth: &DepthImage,
        pose: &Pose,
        k: &Intrinsics,
    ) {
        let tau = VOXEL * TRUNC_VOXELS as f64;
        let sx = feats.width() as f64 / k.width as f64;
        let sy = feats.height() as f64 / k.height as f64;
        let fk = Intrinsics::new(
            k.fx * sx,
            k.fy * sy,
            (k.cx + 0.5) * sx - 0.5,
            (k.cy + 0.5) * sy - 0.5,
            feats.width(),
            feats.height(),
        )
        .unwrap();
        let fk = if sx == 1.0 && sy == 1.0 { *k } else { fk };
        for g in grid_indices() {
            if tsdf.get(g).weight <= 0.0 {
                continue;
            }
            let p_cam = to_camera(pose, &g.center(VOXEL));
            let Some((col, row)) = scan_pixel(k, &p_cam) else {
                continue;
            };
            let d = depth.get(col, row) as f64;
            if !(d > 0.0 && d <= 7.0) || (p_cam.z - d).abs() > tau {
                continue;
            }
            let Some((fc, fr)) = scan_pixel(&fk, &p_cam) else {
                continue;
            };
            let obs = feats.pixel(fc, fr);
            let slot = &mut self.voxels[flat(g)];
            match (slot.as_mut(), self.mode) {
                (None, _) => *slot = Some(obs.to_vec()),
                (Some(f), FusionMode::Overwrite) => f.copy_from_slice(obs),
                (Some(f), FusionMode::Blend { alpha }) => {
                    for (x, &o) in f.iter_mut().zip(obs) {
                        *x += alpha * (o - *x);
                    }
                }
            }
        }
    }
}

/// Scene for the dense-grid comparisons: a sphere inside the 16^3 grid seen
/// from a few 64x64 views, with seeded random 32x32 feature images.
pub struct TinyScene {
    pub k: Intrinsics,
    pub frames: Vec<(DepthImage, FeatureImage, Pose)>,
}

pub fn tiny_scene(seed: u64, n_frames: usize) -> TinyScene {
    let center = Point3::new(0.08, 0.08, 0.08);
    let k = Intrinsics::new(90.0, 90.0, 31.5, 31.5, 64, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = orbit_poses(&center, 0.3, n_frames)
        .into_iter()
        .map(|pose| {
            let depth = analytic_sphere_depth(&center, 0.05, &pose, &k);
            let data = (0..32 * 32 * 3).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            (depth, FeatureImage::new(32, 32, 3, data).unwrap(), pose)
        })
        .collect();
    TinyScene { k, frames }
}

/// Library layers over the tiny scene with every grid block preallocated,
/// so the comparison covers the whole dense grid.
pub fn run_library(scene: &TinyScene, tsdf_cfg: &TsdfConfig, fusion: FusionMode) -> (TsdfLayer, FeatureLayer) {
    let mut tsdf = TsdfLayer::new(spec());
    for x in 0..2 {
        for y in 0..2 {
            for z in 0..2 {
                tsdf.allocate_block(BlockIndex::new(x, y, z));
            }
        }
    }
    let mut features = FeatureLayer::new(spec());
    let fcfg = FeatureFusionConfig {
        mode: fusion,
        ..Default::default()
    };
    for (depth, feats, pose) in &scene.frames {
        integrate_depth_frame(&mut tsdf, depth, pose, &scene.k, tsdf_cfg).unwrap();
        integrate_feature_frame(&mut features, &tsdf, feats, depth, pose, &scene.k, &fcfg).unwrap();
    }
    (tsdf, features)
}

pub fn run_oracle(scene: &TinyScene, mode: DistanceMode, fusion: FusionMode) -> (OracleTsdf, OracleFeatures) {
    let mut tsdf = OracleTsdf::new(mode);
    let mut features = OracleFeatures::new(fusion);
    for (depth, feats, pose) in &scene.frames {
        tsdf.integrate(depth, pose, &scene.k);
        features.integrate(&tsdf, feats, depth, pose, &scene.k);
    }
    (tsdf, features)
}

/// Number of grid voxels where library and oracle disagree in any bit,
/// plus the number of observed voxels compared.
pub fn compare(lib: &(TsdfLayer, FeatureLayer), oracle: &(OracleTsdf, OracleFeatures)) -> (usize, usize) {
    let mut mismatches = 0;
    let mut observed = 0;
    for g in grid_indices() {
        let a = lib.0.voxel(g).copied().unwrap_or_default();
        let b = oracle.0.get(g);
        if a.weight > 0.0 {
            observed += 1;
        }
        let tsdf_same = a.weight.to_bits() == b.weight.to_bits()
            && (a.weight == 0.0 || a.distance.to_bits() == b.distance.to_bits());
        let fa = lib.1.voxels().voxel(g).filter(|v| v.observed).map(|v| &v.feature);
        let fb = oracle.1.get(g);
        let feat_same = match (fa, fb) {
            (None, None) => true,
            (Some(x), Some(y)) => x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()) && x.len() == y.len(),
            _ => false,
        };
        if !(tsdf_same && feat_same) {
            mismatches += 1;
        }
    }
    (mismatches, observed)
}

/// Sphere sequence used by the fidelity checks.
pub struct SphereRun {
    pub center: Point3<f64>,
    pub radius: f64,
    pub layer: TsdfLayer,
}

pub fn fuse_sphere(views: usize, config: &TsdfConfig) -> SphereRun {
    let center = Point3::new(0.013, -0.021, 0.007);
    let radius = 0.2;
    let k = Intrinsics::new(200.0, 200.0, 79.5, 59.5, 160, 120).unwrap();
    let mut layer = TsdfLayer::new(spec());
    for pose in orbit_poses(&center, 1.0, views) {
        let depth = analytic_sphere_depth(&center, radius, &pose, &k);
        integrate_depth_frame(&mut layer, &depth, &pose, &k, config).unwrap();
    }
    SphereRun { center, radius, layer }
}

/// RMSE of fused distances against the true signed distance over observed
/// voxels with `|sdf| <= band`, and the number of such voxels.
pub fn sphere_rmse(run: &SphereRun, band: f64) -> (f64, usize) {
    let (mut sum, mut n) = (0.0, 0usize);
    for (g, v) in run.layer.iter_voxels() {
        let truth = (g.center(VOXEL) - run.center).norm() - run.radius;
        if v.is_observed() && truth.abs() <= band {
            sum += (v.distance as f64 - truth).powi(2);
            n += 1;
        }
    }
    ((sum / n.max(1) as f64).sqrt(), n)
}

/// Feature image on the tiny sphere holding the hit point's coordinates.
pub fn position_features(center: &Point3<f64>, radius: f64, pose: &Pose, k: &Intrinsics) -> FeatureImage {
    sphere_feature_image(center, radius, pose, k, 3, |p| vec![p.x as f32, p.y as f32, p.z as f32])
}

/// Random orthogonal 3x3 matrix from a seed.
pub fn random_rotation(seed: u64) -> nalgebra::Matrix3<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = nalgebra::Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}
