//! Frame-in, featurized-mesh-out facade over one TSDF layer and one feature
//! layer.
//!
//! ```no_run
//! # use feature_tsdf::*;
//! # fn frames() -> Vec<(DepthImage, FeatureImage, Pose, Intrinsics)> { vec![] }
//! let mut mapper = Mapper::new(&[0.01])?;
//! for (depth, features, pose, intrinsics) in frames() {
//!     mapper.add_depth_frame(&depth, &pose, &intrinsics)?;
//!     mapper.add_feature_frame(&features, &pose, &intrinsics)?;
//! }
//! mapper.update_feature_mesh()?;
//! let mesh = mapper.get_feature_mesh();
//! println!("{} vertices, {} features each", mesh.len(), mesh.feature_dim());
//! # Ok::<(), feature_tsdf::Error>(())
//! ```

use crate::camera::{Intrinsics, Pose};
use crate::cloud::FeaturePointCloud;
use crate::error::{Error, Result};
use crate::feature::{integrate_feature_frame, FeatureFusionConfig, FeatureLayer, FeatureStats};
use crate::grid::GridSpec;
use crate::image::{DepthImage, FeatureImage};
use crate::mesh::{extract_feature_mesh, MeshStats, MeshingConfig};
use crate::tsdf::{integrate_depth_frame, IntegrationStats, TsdfConfig, TsdfLayer};

#[derive(Debug, Clone, PartialEq)]
pub struct MapperConfig {
    pub voxel_size_m: f64,
    pub truncation_voxels: u32,
    /// Fixes the feature width up front; otherwise the first feature frame does.
    pub feature_dim: Option<usize>,
    pub tsdf: TsdfConfig,
    pub fusion: FeatureFusionConfig,
    pub meshing: MeshingConfig,
}

impl Default for MapperConfig {
    fn default() -> Self {
        Self {
            voxel_size_m: 0.01,
            truncation_voxels: 4,
            feature_dim: None,
            tsdf: TsdfConfig::default(),
            fusion: FeatureFusionConfig::default(),
            meshing: MeshingConfig::default(),
        }
    }
}

impl MapperConfig {
    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.voxel_size_m, self.truncation_voxels)
    }
}

#[derive(Debug, Clone)]
struct PendingDepth {
    depth: DepthImage,
    pose: Pose,
    intrinsics: Intrinsics,
}

#[derive(Debug, Clone)]
pub struct Mapper {
    config: MapperConfig,
    tsdf: TsdfLayer,
    features: FeatureLayer,
    pending: Option<PendingDepth>,
    frames: usize,
    mesh: FeaturePointCloud,
    mesh_stats: Option<MeshStats>,
}

impl Mapper {
    /// Mapper with default settings. Exactly one voxel size is supported.
    pub fn new(voxel_sizes_m: &[f64]) -> Result<Self> {
        let [voxel_size_m] = voxel_sizes_m else {
            return Err(Error::InvalidConfig(format!(
                "exactly one voxel size is supported, got {}",
                voxel_sizes_m.len()
            )));
        };
        Self::with_config(MapperConfig {
            voxel_size_m: *voxel_size_m,
            ..Default::default()
        })
    }

    pub fn with_config(config: MapperConfig) -> Result<Self> {
        let spec = config.grid_spec()?;
        config.tsdf.validate()?;
        config.fusion.validate()?;
        config.meshing.validate()?;
        let features = match config.feature_dim {
            Some(dim) => FeatureLayer::with_feature_dim(spec, dim)?,
            None => FeatureLayer::new(spec),
        };
        Ok(Self {
            tsdf: TsdfLayer::new(spec),
            features,
            pending: None,
            frames: 0,
            mesh: FeaturePointCloud::new(config.feature_dim.unwrap_or(0)),
            mesh_stats: None,
            config,
        })
    }

    pub fn config(&self) -> &MapperConfig {
        &self.config
    }

    /// Integrates a depth frame and arms the feature step for the same view.
    pub fn add_depth_frame(
        &mut self,
        depth: &DepthImage,
        pose: &Pose,
        intrinsics: &Intrinsics,
    ) -> Result<IntegrationStats> {
        let stats = integrate_depth_frame(&mut self.tsdf, depth, pose, intrinsics, &self.config.tsdf)?;
        self.pending = Some(PendingDepth {
            depth: depth.clone(),
            pose: *pose,
            intrinsics: *intrinsics,
        });
        self.frames += 1;
        Ok(stats)
    }

    /// Fuses features observed from the view of the latest depth frame.
    /// `intrinsics` are the depth camera's.
    pub fn add_feature_frame(
        &mut self,
        features: &FeatureImage,
        pose: &Pose,
        intrinsics: &Intrinsics,
    ) -> Result<FeatureStats> {
        let pending = self
            .pending
            .as_ref()
            .ok_or_else(|| Error::Ordering("feature frame added before its depth frame".into()))?;
        if pending.pose != *pose || pending.intrinsics != *intrinsics {
            return Err(Error::Ordering(
                "feature frame pose/intrinsics differ from the latest depth frame".into(),
            ));
        }
        let stats = integrate_feature_frame(
            &mut self.features,
            &self.tsdf,
            features,
            &pending.depth,
            &pending.pose,
            &pending.intrinsics,
            &self.config.fusion,
        )?;
        self.pending = None;
        Ok(stats)
    }

    /// Re-extracts the featurized vertex cloud from the current layers.
    pub fn update_feature_mesh(&mut self) -> Result<MeshStats> {
        let (mesh, stats) = extract_feature_mesh(&self.tsdf, &self.features, &self.config.meshing)?;
        self.mesh = mesh;
        self.mesh_stats = Some(stats);
        Ok(stats)
    }

    /// Cloud from the last [`Mapper::update_feature_mesh`]; empty before.
    pub fn get_feature_mesh(&self) -> &FeaturePointCloud {
        &self.mesh
    }

    pub fn last_mesh_stats(&self) -> Option<MeshStats> {
        self.mesh_stats
    }

    pub fn frames_integrated(&self) -> usize {
        self.frames
    }

    pub fn tsdf_layer(&self) -> &TsdfLayer {
        &self.tsdf
    }

    pub fn feature_layer(&self) -> &FeatureLayer {
        &self.features
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view() -> (DepthImage, Pose, Intrinsics) {
        let k = Intrinsics::new(20.0, 20.0, 3.5, 3.5, 8, 8).unwrap();
        (DepthImage::new(8, 8, vec![1.0; 64]).unwrap(), Pose::identity(), k)
    }

    #[test]
    fn empty_before_update() {
        let m = Mapper::new(&[0.01]).unwrap();
        assert!(m.get_feature_mesh().is_empty());
        assert_eq!(m.frames_integrated(), 0);
    }

    #[test]
    fn voxel_size_list_must_have_one_entry() {
        assert!(Mapper::new(&[]).is_err());
        assert!(Mapper::new(&[0.01, 0.02]).is_err());
        assert!(Mapper::new(&[-0.01]).is_err());
    }

    #[test]
    fn feature_before_depth_is_an_ordering_error() {
        let (_, pose, k) = view();
        let mut m = Mapper::new(&[0.01]).unwrap();
        let f = FeatureImage::constant(8, 8, &[1.0]).unwrap();
        assert!(matches!(m.add_feature_frame(&f, &pose, &k), Err(Error::Ordering(_))));
    }

    #[test]
    fn feature_needs_matching_view_and_is_consumed() {
        let (depth, pose, k) = view();
        let mut m = Mapper::new(&[0.01]).unwrap();
        m.add_depth_frame(&depth, &pose, &k).unwrap();
        let f = FeatureImage::constant(8, 8, &[1.0]).unwrap();
        let moved = Pose::new(nalgebra::Matrix3::identity(), nalgebra::Vector3::new(0.1, 0.0, 0.0)).unwrap();
        assert!(matches!(m.add_feature_frame(&f, &moved, &k), Err(Error::Ordering(_))));
        m.add_feature_frame(&f, &pose, &k).unwrap();
        assert!(matches!(m.add_feature_frame(&f, &pose, &k), Err(Error::Ordering(_))));
        assert_eq!(m.feature_layer().feature_dim(), Some(1));
    }
}
