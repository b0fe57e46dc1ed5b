// Fuses an analytic sphere seen from an orbit of cameras and reports how
// closely the TSDF and the extracted vertices match the true surface.

use std::time::Instant;

use feature_tsdf::synthetic::{analytic_sphere_depth, orbit_poses};
use feature_tsdf::{integrate_depth_frame, marching_cubes, GridSpec, Intrinsics, TsdfConfig, TsdfLayer};
use nalgebra::Point3;

pub fn run_example() -> feature_tsdf::Result<()> {
    let center = Point3::new(0.0, 0.0, 0.0);
    let radius = 0.2;
    let spec = GridSpec::new(0.01, 4)?;
    let k = Intrinsics::new(200.0, 200.0, 79.5, 59.5, 160, 120)?;
    let mut layer = TsdfLayer::new(spec);

    let start = Instant::now();
    for pose in orbit_poses(&center, 1.0, 20) {
        let depth = analytic_sphere_depth(&center, radius, &pose, &k);
        integrate_depth_frame(&mut layer, &depth, &pose, &k, &TsdfConfig::default())?;
    }
    let elapsed = start.elapsed();

    let band = spec.truncation_distance_m() / 2.0;
    let (mut sum, mut n) = (0.0, 0usize);
    for (g, v) in layer.iter_voxels() {
        let truth = (g.center(spec.voxel_size_m()) - center).norm() - radius;
        if v.is_observed() && truth.abs() <= band {
            sum += (v.distance as f64 - truth).powi(2);
            n += 1;
        }
    }
    let rmse = (sum / n as f64).sqrt();

    let (mesh, _) = marching_cubes(&layer, 1.0);
    let worst = mesh
        .vertices
        .iter()
        .map(|v| ((v - center).norm() - radius).abs())
        .fold(0.0, f64::max);

    println!("blocks allocated     {}", layer.num_blocks());
    println!("near-band voxels     {n}");
    println!("TSDF RMSE            {rmse:.5} m");
    println!("vertices             {}", mesh.vertices.len());
    println!("max vertex error     {worst:.5} m");
    println!("integration time     {:.2?}", elapsed);
    Ok(())
}

#[allow(dead_code)]
fn main() -> feature_tsdf::Result<()> {
    run_example()
}
