// Writes per-frame snapshots while reconstructing and shows the map growing,
// then queries the final snapshot at a point on and off the surface.

use feature_tsdf::io::{load_sequence, load_snapshot};
use feature_tsdf::pipeline::{query_snapshot, reconstruct, ReconstructOptions};
use feature_tsdf::synthetic::{write_sphere_sequence, SphereSequence};
use feature_tsdf::MapperConfig;
use nalgebra::Point3;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let opts = SphereSequence {
        frames: 6,
        ..Default::default()
    };
    let manifest = write_sphere_sequence(dir.path().join("sequence"), &opts)?;
    let report = reconstruct(
        &load_sequence(&manifest)?,
        &ReconstructOptions {
            mapper: MapperConfig::default(),
            snapshot_every: Some(1),
        },
        &dir.path().join("out"),
    )?;
    for path in &report.snapshots {
        let snap = load_snapshot(path)?;
        println!(
            "{}: {} vertices",
            path.file_name().unwrap().to_string_lossy(),
            snap.cloud.len()
        );
    }

    let last = load_snapshot(&report.final_snapshot)?;
    let on_surface = opts.center + nalgebra::Vector3::new(0.0, 0.0, opts.radius);
    for p in [on_surface, Point3::new(1.0, 1.0, 1.0)] {
        println!("query {:?} -> {:?}", p.coords.as_slice(), query_snapshot(&last, &p, 2));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
