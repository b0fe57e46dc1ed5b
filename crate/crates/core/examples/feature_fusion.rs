// Drives the Mapper facade with depth plus a half-resolution feature image
// per view and queries the resulting featurized vertex cloud.

use feature_tsdf::synthetic::{analytic_sphere_depth, orbit_poses, sphere_feature_image};
use feature_tsdf::{FeatureFusionConfig, Intrinsics, Mapper, MapperConfig};
use nalgebra::Point3;

pub fn run_example() -> feature_tsdf::Result<()> {
    let center = Point3::new(0.0, 0.0, 0.0);
    let radius = 0.15;
    let k = Intrinsics::new(150.0, 150.0, 63.5, 47.5, 128, 96)?;
    let feature_k = k.scaled_to(64, 48);

    let mut mapper = Mapper::with_config(MapperConfig {
        fusion: FeatureFusionConfig::blend(0.1),
        ..Default::default()
    })?;
    for pose in orbit_poses(&center, 0.7, 8) {
        let depth = analytic_sphere_depth(&center, radius, &pose, &k);
        // A stand-in for an image encoder: unit normal plus height.
        let features = sphere_feature_image(&center, radius, &pose, &feature_k, 4, |p| {
            let n = (p - center) / radius;
            vec![n.x as f32, n.y as f32, n.z as f32, p.z as f32]
        });
        mapper.add_depth_frame(&depth, &pose, &k)?;
        mapper.add_feature_frame(&features, &pose, &k)?;
    }
    let stats = mapper.update_feature_mesh()?;
    let cloud = mapper.get_feature_mesh();
    println!(
        "{} frames, {} vertices ({} dropped), {} features each",
        mapper.frames_integrated(),
        cloud.len(),
        stats.vertices_dropped,
        cloud.feature_dim()
    );

    let top = Point3::new(0.0, 0.0, radius);
    if let Some(i) = cloud.nearest_within(&top, 0.02) {
        println!(
            "vertex near the top {:?} has feature {:?}",
            cloud.point(i),
            cloud.feature(i)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> feature_tsdf::Result<()> {
    run_example()
}
