//! Metric-semantic volumetric reconstruction.
//!
//! Posed depth images are fused into a sparse truncated signed distance
//! field; per-pixel feature vectors (from any image encoder, or plain RGB)
//! are fused into a co-registered voxel layer restricted to the truncation
//! band of the current view. Marching cubes on the TSDF yields surface
//! vertices, each tagged with its nearest fused feature, which is the
//! featurized vertex cloud consumed downstream.
//!
//! [`Mapper`] composes the pieces; the individual modules can also be driven
//! directly.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backproject;
pub mod camera;
pub mod cloud;
pub mod error;
pub mod feature;
pub mod feature_tools;
pub mod grid;
pub mod image;
pub mod io;
pub mod mapper;
mod mc_tables;
pub mod mesh;
pub mod pipeline;
pub mod synthetic;
pub mod tsdf;

pub use backproject::{backproject_frame, subsample, SampleMethod};
pub use camera::{Intrinsics, Pose};
pub use cloud::FeaturePointCloud;
pub use error::{Error, Result};
pub use feature::{
    integrate_feature_frame, query_nearest_feature, FeatureFusionConfig, FeatureLayer, FeatureStats, FeatureVoxel,
    FusionMode,
};
pub use feature_tools::{pca_colorize, rgb_feature_extractor};
pub use grid::{voxel_center, world_to_voxel, BlockIndex, GlobalIndex, GridSpec, VoxelIndex, VoxelLayer, BLOCK_SIDE};
pub use image::{ColorImage, ColorScale, DepthImage, FeatureImage};
pub use mapper::{Mapper, MapperConfig};
pub use mesh::{extract_feature_mesh, interpolate_tsdf, marching_cubes, MeshStats, MeshingConfig, SurfaceMesh};
pub use tsdf::{
    incidence_factors, integrate_depth_frame, DistanceMode, IntegrationStats, TsdfConfig, TsdfLayer, TsdfVoxel,
    WeightPolicy,
};
