// Fuses 4-channel features, false-colors them with PCA and writes a colored
// PLY next to a plain one.

use feature_tsdf::io::{export_ply, load_sequence, load_snapshot};
use feature_tsdf::pipeline::{reconstruct, snapshot_stats, ReconstructOptions};
use feature_tsdf::synthetic::{write_sphere_sequence, SphereSequence};
use feature_tsdf::{pca_colorize, MapperConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let opts = SphereSequence {
        frames: 4,
        with_color: false,
        with_features: true,
        ..Default::default()
    };
    let manifest = write_sphere_sequence(dir.path().join("sequence"), &opts)?;
    let report = reconstruct(
        &load_sequence(&manifest)?,
        &ReconstructOptions {
            mapper: MapperConfig::default(),
            snapshot_every: None,
        },
        &dir.path().join("out"),
    )?;
    let snapshot = load_snapshot(&report.final_snapshot)?;
    println!("{}", serde_json::to_string(&snapshot_stats(&snapshot))?);

    let cloud = &snapshot.cloud;
    let colors = pca_colorize(cloud.features(), cloud.feature_dim())?;
    let colored = dir.path().join("colored.ply");
    export_ply(cloud, Some(&colors), &colored)?;
    export_ply(cloud, None, dir.path().join("plain.ply"))?;
    let size = std::fs::metadata(&colored)?.len();
    println!("wrote {} colored vertices ({size} bytes)", cloud.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
