use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::Point3;
use serde_json::json;

use feature_tsdf::io::{export_ply, load_sequence, load_snapshot};
use feature_tsdf::pipeline::{query_snapshot, reconstruct, snapshot_stats, ReconstructOptions};
use feature_tsdf::{pca_colorize, FeatureFusionConfig, FusionMode, MapperConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

#[derive(Parser)]
#[command(name = "feature-tsdf", version, about = "Featurized TSDF reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fusion {
    Overwrite,
    Blend,
}

#[derive(Clone, Copy, ValueEnum)]
enum Colorize {
    Pca,
    None,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse a manifest's frames and write featurized vertex snapshots.
    Reconstruct {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0.01, value_parser = positive_f64)]
        voxel_size: f64,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
        truncation_voxels: u32,
        #[arg(long, value_enum, default_value_t = Fusion::Overwrite)]
        fusion: Fusion,
        #[arg(long, default_value_t = 0.1, value_parser = unit_alpha)]
        alpha: f32,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        snapshot_every: Option<u64>,
    },
    /// Write a snapshot as a binary PLY point cloud.
    ExportPly {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Colorize::None)]
        colorize: Colorize,
    },
    /// Print the feature of the vertex nearest to a point, or null.
    Query {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, value_parser = parse_point)]
        point: Point3<f64>,
        #[arg(long, default_value_t = 2)]
        radius_voxels: u32,
    },
    /// Print vertex count, feature width and bounding box.
    Stats {
        #[arg(long)]
        snapshot: PathBuf,
    },
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn unit_alpha(s: &str) -> Result<f32, String> {
    let v: f32 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1], got {v}"))
    }
}

fn parse_point(s: &str) -> Result<Point3<f64>, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Point3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

fn run(command: Command) -> feature_tsdf::Result<()> {
    match command {
        Command::Reconstruct {
            manifest,
            voxel_size,
            truncation_voxels,
            fusion,
            alpha,
            out_dir,
            snapshot_every,
        } => {
            let sequence = load_sequence(&manifest)?;
            let mode = match fusion {
                Fusion::Overwrite => FusionMode::Overwrite,
                Fusion::Blend => FusionMode::Blend { alpha },
            };
            let options = ReconstructOptions {
                mapper: MapperConfig {
                    voxel_size_m: voxel_size,
                    truncation_voxels,
                    fusion: FeatureFusionConfig {
                        mode,
                        ..Default::default()
                    },
                    ..Default::default()
                },
                snapshot_every: snapshot_every.map(|k| k as usize),
            };
            let report = reconstruct(&sequence, &options, &out_dir)?;
            println!("{}", serde_json::to_string(&report).expect("report serializes"));
        }
        Command::ExportPly {
            snapshot,
            out,
            colorize,
        } => {
            let snap = load_snapshot(&snapshot)?;
            let colors = match colorize {
                Colorize::Pca if !snap.cloud.is_empty() && snap.cloud.feature_dim() > 0 => {
                    Some(pca_colorize(snap.cloud.features(), snap.cloud.feature_dim())?)
                }
                _ => None,
            };
            export_ply(&snap.cloud, colors.as_deref(), &out)?;
            println!(
                "{}",
                json!({ "vertices": snap.cloud.len(), "colored": colors.is_some() })
            );
        }
        Command::Query {
            snapshot,
            point,
            radius_voxels,
        } => {
            let snap = load_snapshot(&snapshot)?;
            println!("{}", json!(query_snapshot(&snap, &point, radius_voxels)));
        }
        Command::Stats { snapshot } => {
            let snap = load_snapshot(&snapshot)?;
            println!(
                "{}",
                serde_json::to_string(&snapshot_stats(&snap)).expect("stats serialize")
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
