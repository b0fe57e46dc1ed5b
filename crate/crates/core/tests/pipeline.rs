mod common;

use common::*;
use feature_tsdf::synthetic::{analytic_plane_depth, analytic_sphere_depth, orbit_poses};
use feature_tsdf::*;
use nalgebra::{Point3, Vector3};
use proptest::prelude::*;

#[test]
fn backprojected_plane_points_lie_on_the_plane() {
    let k = Intrinsics::new(80.0, 80.0, 39.5, 29.5, 80, 60).unwrap();
    let pose = Pose::look_at(Point3::new(0.3, -0.4, 1.2), Point3::new(0.0, 0.0, 0.1), Vector3::z()).unwrap();
    let on_plane = Point3::new(0.0, 0.0, 0.1);
    let normal = Vector3::new(0.1, 0.2, 1.0).normalize();
    let depth = analytic_plane_depth(&on_plane, &normal, &pose, &k);
    let ids: Vec<f32> = (0..80 * 60).map(|i| i as f32).collect();
    let features = FeatureImage::new(80, 60, 1, ids).unwrap();
    let cloud = backproject_frame(&depth, &features, &pose, &k, 1).unwrap();
    assert_eq!(cloud.len(), depth.num_valid());
    let cam_from_world = pose.inverse();
    for i in 0..cloud.len() {
        let [x, y, z] = cloud.point(i).map(|v| v as f64);
        let p = Point3::new(x, y, z);
        assert!(
            normal.dot(&(p - on_plane)).abs() < 1e-6,
            "off plane by {}",
            normal.dot(&(p - on_plane))
        );
        // The feature is the id of the pixel the point re-projects to.
        let (u, v) = k.project(&cam_from_world.transform(&p)).unwrap();
        let id = cloud.feature(i)[0] as usize;
        let (col, row) = (id % 80, id / 80);
        assert!((u - col as f64).abs() < 1e-4 && (v - row as f64).abs() < 1e-4);
    }
}

#[test]
fn half_resolution_features_follow_pixel_edges() {
    let k = Intrinsics::new(60.0, 60.0, 31.5, 23.5, 64, 48).unwrap();
    let depth = DepthImage::new(64, 48, vec![1.0; 64 * 48]).unwrap();
    let ids: Vec<f32> = (0..32 * 24).map(|i| i as f32).collect();
    let features = FeatureImage::new(32, 24, 1, ids).unwrap();
    let cloud = backproject_frame(&depth, &features, &Pose::identity(), &k, 1).unwrap();
    for (i, row) in (0..48).flat_map(|r| (0..64).map(move |c| (c, r))).enumerate() {
        let (col, r) = row;
        let expected = (r / 2) * 32 + col / 2;
        assert_eq!(cloud.feature(i)[0] as usize, expected);
    }
}

#[test]
fn subsampling_keeps_point_feature_pairs() {
    let k = Intrinsics::new(80.0, 80.0, 39.5, 29.5, 80, 60).unwrap();
    let pose = orbit_poses(&Point3::origin(), 0.8, 3)[1];
    let depth = analytic_sphere_depth(&Point3::origin(), 0.2, &pose, &k);
    let features = position_features(&Point3::origin(), 0.2, &pose, &k);
    let cloud = backproject_frame(&depth, &features, &pose, &k, 1).unwrap();
    for method in [
        SampleMethod::Random { seed: 3 },
        SampleMethod::FarthestPoint { seed: 3 },
    ] {
        let sub = subsample(&cloud, 200, method);
        assert_eq!(sub.len(), 200);
        for i in 0..sub.len() {
            let p = sub.point(i);
            let f = sub.feature(i);
            for a in 0..3 {
                assert!((p[a] - f[a]).abs() < 1e-4, "{p:?} vs {f:?}");
            }
        }
        assert_eq!(sub, subsample(&cloud, 200, method));
    }
    assert_eq!(
        subsample(&cloud, cloud.len() + 5, SampleMethod::Random { seed: 0 }),
        cloud
    );
}

#[test]
fn farthest_point_steps_maximize_distance_to_chosen_set() {
    let scene = tiny_scene(9, 1);
    let (depth, feats, pose) = &scene.frames[0];
    let cloud = backproject_frame(depth, feats, pose, &scene.k, 1).unwrap();
    let sub = subsample(&cloud, 40, SampleMethod::FarthestPoint { seed: 12 });
    let dist = |a: [f32; 3], b: [f32; 3]| (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f32>();
    for step in 1..sub.len() {
        let chosen = &sub.points()[..step];
        let gap = |p: [f32; 3]| chosen.iter().map(|&c| dist(p, c)).fold(f32::INFINITY, f32::min);
        let best = cloud.points().iter().map(|&p| gap(p)).fold(0.0, f32::max);
        assert_eq!(gap(sub.point(step)), best, "step {step}");
    }
}

#[test]
fn mapper_matches_direct_composition() {
    let scene = tiny_scene(17, 4);
    let mut mapper = Mapper::new(&[VOXEL]).unwrap();
    let mut tsdf = TsdfLayer::new(spec());
    let mut features = FeatureLayer::new(spec());
    for (depth, feats, pose) in &scene.frames {
        mapper.add_depth_frame(depth, pose, &scene.k).unwrap();
        mapper.add_feature_frame(feats, pose, &scene.k).unwrap();
        integrate_depth_frame(&mut tsdf, depth, pose, &scene.k, &TsdfConfig::default()).unwrap();
        integrate_feature_frame(&mut features, &tsdf, feats, depth, pose, &scene.k, &Default::default()).unwrap();
    }
    mapper.update_feature_mesh().unwrap();
    let (direct, _) = extract_feature_mesh(&tsdf, &features, &MeshingConfig::default()).unwrap();
    assert!(!direct.is_empty());
    assert_eq!(mapper.get_feature_mesh(), &direct);
    assert_eq!(mapper.frames_integrated(), 4);
}

#[test]
fn geometry_only_mapper_keeps_bare_vertices() {
    let scene = tiny_scene(1, 3);
    let mut mapper = Mapper::new(&[VOXEL]).unwrap();
    for (depth, _, pose) in &scene.frames {
        mapper.add_depth_frame(depth, pose, &scene.k).unwrap();
    }
    let stats = mapper.update_feature_mesh().unwrap();
    let cloud = mapper.get_feature_mesh();
    assert_eq!(cloud.feature_dim(), 0);
    assert_eq!(cloud.len(), stats.vertices_extracted);
    assert!(!cloud.is_empty());
}

#[test]
fn every_vertex_carries_a_feature_from_nearby() {
    let scene = tiny_scene(4, 4);
    let (tsdf, features) = run_library(&scene, &TsdfConfig::default(), FusionMode::Overwrite);
    let (cloud, stats) = extract_feature_mesh(&tsdf, &features, &MeshingConfig::default()).unwrap();
    assert_eq!(cloud.len() + stats.vertices_dropped, stats.vertices_extracted);
    for i in 0..cloud.len() {
        let [x, y, z] = cloud.point(i).map(|v| v as f64);
        let p = Point3::new(x, y, z);
        let want = query_nearest_feature(&features, &p, 2).unwrap();
        assert_eq!(cloud.feature(i), want);
    }
}

#[test]
fn projective_distances_overshoot_on_curved_surfaces() {
    // The raw depth gap inflates distances at oblique incidence; the default
    // tangent-plane mode removes most of that.
    let band = spec().truncation_distance_m() / 2.0;
    let projective = fuse_sphere(
        20,
        &TsdfConfig {
            distance_mode: DistanceMode::Projective,
            ..Default::default()
        },
    );
    let tangent = fuse_sphere(20, &TsdfConfig::default());
    let (rp, _) = sphere_rmse(&projective, band);
    let (rt, _) = sphere_rmse(&tangent, band);
    assert!(rt < 0.5 * rp, "tangent {rt} vs projective {rp}");
    assert!(rt < VOXEL / 2.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backproject_then_project_returns_pixel(
        col in 0usize..64, row in 0usize..48, d in 0.1f32..6.0,
        yaw in -3.0f64..3.0, tx in -1.0f64..1.0,
    ) {
        let k = Intrinsics::new(55.0, 57.0, 31.5, 23.5, 64, 48).unwrap();
        let mut data = vec![0.0f32; 64 * 48];
        data[row * 64 + col] = d;
        let depth = DepthImage::new(64, 48, data).unwrap();
        let rotation = nalgebra::Rotation3::from_euler_angles(0.3, -0.2, yaw).into_inner();
        let pose = Pose::new(rotation, Vector3::new(tx, 0.5, -0.2)).unwrap();
        let cloud = backproject_frame(&depth, &FeatureImage::constant(64, 48, &[1.0]).unwrap(), &pose, &k, 1).unwrap();
        prop_assert_eq!(cloud.len(), 1);
        let [x, y, z] = cloud.point(0).map(|v| v as f64);
        // Points are stored as f32; re-projection error stays far below a pixel.
        let (u, v) = k.project(&pose.inverse().transform(&Point3::new(x, y, z))).unwrap();
        prop_assert!((u - col as f64).abs() < 1e-4 && (v - row as f64).abs() < 1e-4);
    }
}
