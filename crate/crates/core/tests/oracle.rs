mod common;

use common::*;
use feature_tsdf::*;
use nalgebra::Point3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn dense_oracle_matches_tangent_plane_overwrite() {
    let scene = tiny_scene(7, 3);
    let lib = run_library(&scene, &TsdfConfig::default(), FusionMode::Overwrite);
    let oracle = run_oracle(&scene, DistanceMode::TangentPlane, FusionMode::Overwrite);
    let (mismatches, observed) = compare(&lib, &oracle);
    assert!(observed > 500, "fixture observes too little: {observed}");
    assert_eq!(mismatches, 0);
}

#[test]
fn dense_oracle_matches_projective_blend() {
    let scene = tiny_scene(11, 4);
    let cfg = TsdfConfig {
        distance_mode: DistanceMode::Projective,
        ..Default::default()
    };
    let fusion = FusionMode::Blend { alpha: 0.3 };
    let lib = run_library(&scene, &cfg, fusion);
    let oracle = run_oracle(&scene, DistanceMode::Projective, fusion);
    let (mismatches, observed) = compare(&lib, &oracle);
    assert!(observed > 500);
    assert_eq!(mismatches, 0);
}

#[test]
fn features_only_land_on_observed_tsdf_voxels() {
    let scene = tiny_scene(3, 3);
    let (tsdf, features) = run_library(&scene, &TsdfConfig::default(), FusionMode::Overwrite);
    assert!(features.num_observed() > 0);
    for (g, v) in features.voxels().iter_voxels() {
        if v.observed {
            assert!(tsdf.voxel(g).is_some_and(|t| t.is_observed()), "{g:?}");
        }
    }
}

fn exhaustive_nearest(layer: &FeatureLayer, p: &Point3<f64>, r: i64) -> Option<GlobalIndex> {
    let origin = GlobalIndex::of_point(p, VOXEL);
    let mut all: Vec<(f64, [i64; 3])> = layer
        .voxels()
        .iter_voxels()
        .filter(|(_, v)| v.observed)
        .filter(|(g, _)| (0..3).all(|a| (g.0[a] - origin.0[a]).abs() <= r))
        .map(|(g, _)| ((g.center(VOXEL) - p).norm_squared(), g.0))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.first().map(|&(_, g)| GlobalIndex(g))
}

#[test]
fn nearest_feature_matches_exhaustive_search() {
    let scene = tiny_scene(5, 3);
    let (_, features) = run_library(&scene, &TsdfConfig::default(), FusionMode::Overwrite);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut hits = 0;
    for _ in 0..100 {
        let p = Point3::new(
            rng.gen_range(0.0..0.16),
            rng.gen_range(0.0..0.16),
            rng.gen_range(0.0..0.16),
        );
        let expected = exhaustive_nearest(&features, &p, 2);
        let got = feature::nearest_observed_voxel(&features, &p, 2);
        assert_eq!(got, expected, "at {p:?}");
        let feat = query_nearest_feature(&features, &p, 2);
        assert_eq!(feat.is_some(), expected.is_some());
        hits += expected.is_some() as usize;
    }
    assert!(hits > 10, "too few queries found a feature: {hits}");
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn integration_is_independent_of_thread_count() {
    let scene = tiny_scene(21, 4);
    let cfg = TsdfConfig::default();
    let one = pool(1).install(|| run_library(&scene, &cfg, FusionMode::Blend { alpha: 0.2 }));
    let four = pool(4).install(|| run_library(&scene, &cfg, FusionMode::Blend { alpha: 0.2 }));
    let cloud = |l: &(TsdfLayer, FeatureLayer)| extract_feature_mesh(&l.0, &l.1, &MeshingConfig::default()).unwrap().0;
    let (a, b) = (cloud(&one), cloud(&four));
    assert!(!a.is_empty());
    assert_eq!(a, b);
    for (g, v) in one.0.iter_voxels() {
        let w = four.0.voxel(g).unwrap();
        assert_eq!(
            (v.distance.to_bits(), v.weight.to_bits()),
            (w.distance.to_bits(), w.weight.to_bits())
        );
    }
}

#[test]
fn frame_order_does_not_change_distances() {
    let scene = tiny_scene(8, 5);
    let cfg = TsdfConfig::default();
    let fuse = |order: &[usize]| {
        let mut layer = TsdfLayer::new(spec());
        for &i in order {
            let (depth, _, pose) = &scene.frames[i];
            integrate_depth_frame(&mut layer, depth, pose, &scene.k, &cfg).unwrap();
        }
        layer
    };
    let a = fuse(&[0, 1, 2, 3, 4]);
    let b = fuse(&[3, 0, 4, 2, 1]);
    assert_eq!(a.sorted_block_indices(), b.sorted_block_indices());
    let mut compared = 0;
    for (g, v) in a.iter_voxels() {
        let w = b.voxel(g).unwrap();
        assert_eq!(v.weight, w.weight);
        if v.is_observed() {
            assert!(
                (v.distance - w.distance).abs() <= 1e-5,
                "{g:?}: {} vs {}",
                v.distance,
                w.distance
            );
            compared += 1;
        }
    }
    assert!(compared > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weights_never_decrease_and_distances_stay_truncated(seed in 0u64..1000, frames in 1usize..5) {
        let scene = tiny_scene(seed, frames);
        let tau = spec().truncation_distance_m() as f32;
        let mut layer = TsdfLayer::new(spec());
        for (depth, _, pose) in &scene.frames {
            let before: Vec<_> = layer.iter_voxels().map(|(g, v)| (g, v.weight)).collect();
            integrate_depth_frame(&mut layer, depth, pose, &scene.k, &TsdfConfig::default()).unwrap();
            for (g, w) in before {
                prop_assert!(layer.voxel(g).unwrap().weight >= w);
            }
            for (_, v) in layer.iter_voxels().filter(|(_, v)| v.is_observed()) {
                prop_assert!(v.distance.abs() <= tau);
                prop_assert!(v.weight <= 100.0);
            }
        }
    }
}
