// Lifts one posed frame to a featurized point cloud and reduces it to a fixed
// budget with random and farthest-point sampling.

use feature_tsdf::synthetic::{analytic_plane_depth, two_tone_sphere_color};
use feature_tsdf::{backproject_frame, rgb_feature_extractor, subsample, Intrinsics, Pose, SampleMethod};
use nalgebra::{Point3, Vector3};

pub fn run_example() -> feature_tsdf::Result<()> {
    let k = Intrinsics::new(100.0, 100.0, 79.5, 59.5, 160, 120)?;
    let pose = Pose::look_at(Point3::new(0.0, -0.5, 1.0), Point3::origin(), Vector3::z())?;
    let depth = analytic_plane_depth(&Point3::origin(), &Vector3::z(), &pose, &k);
    // Any color image works; the two-tone sphere is just a convenient one.
    let color = two_tone_sphere_color(&Point3::new(0.0, 0.0, 0.1), 0.3, &pose, &k);
    let features = rgb_feature_extractor(&color, true)?;

    let cloud = backproject_frame(&depth, &features, &pose, &k, 2)?;
    println!("back-projected {} points", cloud.len());
    let random = subsample(&cloud, 512, SampleMethod::Random { seed: 1 });
    let spread = subsample(&cloud, 512, SampleMethod::FarthestPoint { seed: 1 });
    for (name, c) in [("random", &random), ("farthest-point", &spread)] {
        let (lo, hi) = c.bounding_box().unwrap_or_default();
        println!("{name:>15}: {} points, extent {:?} .. {:?}", c.len(), lo, hi);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> feature_tsdf::Result<()> {
    run_example()
}
