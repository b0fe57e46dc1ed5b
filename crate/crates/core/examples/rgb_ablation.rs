// Reconstructs a red/blue sphere from an on-disk sequence using plain RGB
// triplets as features, then counts how the vertex features cluster.

use feature_tsdf::io::{load_sequence, load_snapshot};
use feature_tsdf::pipeline::{reconstruct, ReconstructOptions};
use feature_tsdf::synthetic::{write_sphere_sequence, SphereSequence};
use feature_tsdf::MapperConfig;

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
            snapshot_every: None,
        },
        &dir.path().join("out"),
    )?;
    let cloud = load_snapshot(&report.final_snapshot)?.cloud;

    let (mut red, mut blue, mut other) = (0, 0, 0);
    for i in 0..cloud.len() {
        match cloud.feature(i) {
            [r, _, b] if r > b => red += 1,
            [r, _, b] if b > r => blue += 1,
            _ => other += 1,
        }
    }
    println!("{} vertices: {red} red, {blue} blue, {other} neither", cloud.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
