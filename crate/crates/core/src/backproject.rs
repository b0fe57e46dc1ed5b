//! Lifting a posed frame to a featurized point cloud, and fixed-budget
//! subsampling of clouds.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::{Intrinsics, Pose};
use crate::cloud::FeaturePointCloud;
use crate::error::{Error, Result};
use crate::feature::feature_intrinsics;
use crate::image::{DepthImage, FeatureImage};
use crate::tsdf::check_depth_dims;

/// World-frame points for every valid depth pixel on a `stride` grid, each
/// tagged with the nearest feature-image pixel. Rows follow row-major pixel
/// order.
pub fn backproject_frame(
    depth: &DepthImage,
    features: &FeatureImage,
    pose: &Pose,
    intrinsics: &Intrinsics,
    stride: usize,
) -> Result<FeaturePointCloud> {
    if stride == 0 {
        return Err(Error::InvalidConfig("stride must be at least 1".into()));
    }
    check_depth_dims(depth, intrinsics)?;
    let feat_k = feature_intrinsics(intrinsics, features)?;
    let mut cloud = FeaturePointCloud::new(features.channels());
    for row in (0..depth.height()).step_by(stride) {
        for col in (0..depth.width()).step_by(stride) {
            let d = depth.get(col, row);
            if !(d > 0.0) {
                continue;
            }
            let p_cam = intrinsics.unproject(col as f64, row as f64, d as f64)?;
            let (u, v) = feat_k.project_unchecked(&p_cam);
            let Some((fc, fr)) = feat_k.nearest_pixel(u, v) else {
                continue;
            };
            let p = pose.transform(&p_cam);
            cloud.push([p.x as f32, p.y as f32, p.z as f32], features.pixel(fc, fr));
        }
    }
    Ok(cloud)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMethod {
    /// Uniform sample without replacement; rows keep their input order.
    Random { seed: u64 },
    /// Greedy farthest-point sampling from a seeded random start; rows are
    /// in selection order.
    FarthestPoint { seed: u64 },
}

/// Reduces `cloud` to at most `n` rows.
pub fn subsample(cloud: &FeaturePointCloud, n: usize, method: SampleMethod) -> FeaturePointCloud {
    if cloud.len() <= n {
        return cloud.clone();
    }
    let indices = match method {
        SampleMethod::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = index::sample(&mut rng, cloud.len(), n).into_vec();
            idx.sort_unstable();
            idx
        }
        SampleMethod::FarthestPoint { seed } => farthest_point_indices(cloud.points(), n, seed),
    };
    cloud.select(&indices)
}

fn farthest_point_indices(points: &[[f32; 3]], n: usize, seed: u64) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(n);
    let mut current = rng.gen_range(0..points.len());
    let mut min_d2 = vec![f64::INFINITY; points.len()];
    for _ in 0..n {
        chosen.push(current);
        let c = points[current];
        let mut next = 0;
        let mut far = f64::NEG_INFINITY;
        for (i, (p, m)) in points.iter().zip(min_d2.iter_mut()).enumerate() {
            let d2: f64 = (0..3).map(|a| (p[a] as f64 - c[a] as f64).powi(2)).sum();
            if d2 < *m {
                *m = d2;
            }
            if *m > far {
                far = *m;
                next = i;
            }
        }
        current = next;
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn two_by_two_unit_depth() {
        let k = Intrinsics::new(1.0, 1.0, 1.0, 1.0, 2, 2).unwrap();
        let depth = DepthImage::new(2, 2, vec![1.0; 4]).unwrap();
        let f = FeatureImage::constant(2, 2, &[0.25]).unwrap();
        let cloud = backproject_frame(&depth, &f, &Pose::identity(), &k, 1).unwrap();
        assert_eq!(cloud.len(), 4);
        assert!(cloud.points().iter().all(|p| p[2] == 1.0));
        assert_eq!(cloud.point(0), [-1.0, -1.0, 1.0]);
        assert_eq!(cloud.point(1), [0.0, -1.0, 1.0]);
    }

    #[test]
    fn invalid_depth_gives_empty_cloud() {
        let k = Intrinsics::new(1.0, 1.0, 1.0, 1.0, 3, 3).unwrap();
        let f = FeatureImage::constant(3, 3, &[1.0, 2.0]).unwrap();
        let cloud = backproject_frame(&DepthImage::empty(3, 3), &f, &Pose::identity(), &k, 1).unwrap();
        assert!(cloud.is_empty());
        assert_eq!(cloud.feature_dim(), 2);
    }

    #[test]
    fn stride_skips_pixels() {
        let k = Intrinsics::new(1.0, 1.0, 1.0, 1.0, 5, 4).unwrap();
        let f = FeatureImage::constant(5, 4, &[1.0]).unwrap();
        let depth = DepthImage::new(5, 4, vec![2.0; 20]).unwrap();
        let cloud = backproject_frame(&depth, &f, &Pose::identity(), &k, 2).unwrap();
        assert_eq!(cloud.len(), 3 * 2);
        assert!(backproject_frame(&depth, &f, &Pose::identity(), &k, 0).is_err());
    }

    #[test]
    fn features_follow_downsampled_image() {
        // 4x2 depth, 2x1 features: left half reads 1, right half reads 2.
        let k = Intrinsics::new(2.0, 2.0, 1.5, 0.5, 4, 2).unwrap();
        let depth = DepthImage::new(4, 2, vec![1.0; 8]).unwrap();
        let f = FeatureImage::new(2, 1, 1, vec![1.0, 2.0]).unwrap();
        let cloud = backproject_frame(&depth, &f, &Pose::identity(), &k, 1).unwrap();
        let got: Vec<f32> = (0..cloud.len()).map(|i| cloud.feature(i)[0]).collect();
        assert_eq!(got, vec![1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0]);
    }

    fn square() -> FeaturePointCloud {
        let pts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        FeaturePointCloud::from_parts(pts, vec![0.0, 1.0, 2.0, 3.0], 1).unwrap()
    }

    #[test]
    fn identity_when_budget_suffices() {
        let c = square();
        assert_eq!(subsample(&c, 4, SampleMethod::Random { seed: 1 }), c);
        assert_eq!(subsample(&c, 10, SampleMethod::FarthestPoint { seed: 1 }), c);
    }

    #[test]
    fn farthest_point_picks_diagonal() {
        for seed in 0..16 {
            let s = subsample(&square(), 2, SampleMethod::FarthestPoint { seed });
            let (a, b) = (s.point(0), s.point(1));
            assert_eq!((a[0] - b[0]).abs() + (a[1] - b[1]).abs(), 2.0, "seed {seed}");
        }
    }

    #[test]
    fn random_is_seeded() {
        let pts: Vec<[f32; 3]> = (0..100).map(|i| [i as f32, 0.0, 0.0]).collect();
        let feats: Vec<f32> = (0..100).map(|i| i as f32).collect();
        let c = FeaturePointCloud::from_parts(pts, feats, 1).unwrap();
        let a = subsample(&c, 10, SampleMethod::Random { seed: 42 });
        let b = subsample(&c, 10, SampleMethod::Random { seed: 42 });
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        let distinct: HashSet<u32> = a.points().iter().map(|p| p[0] as u32).collect();
        assert_eq!(distinct.len(), 10);
        assert_eq!(subsample(&c, 0, SampleMethod::Random { seed: 1 }).len(), 0);
        assert_eq!(subsample(&c, 0, SampleMethod::FarthestPoint { seed: 1 }).len(), 0);
    }
}
