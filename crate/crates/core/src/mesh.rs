//! Zero-isosurface extraction and vertex featurization.

use std::collections::HashMap;

use nalgebra::Point3;
use rayon::prelude::*;

use crate::cloud::FeaturePointCloud;
use crate::error::{Error, Result};
use crate::feature::{query_nearest_feature, FeatureLayer};
use crate::grid::GlobalIndex;
use crate::mc_tables::{CORNERS, EDGES, EDGE_TABLE, TRI_TABLE};
use crate::tsdf::{TsdfLayer, TsdfVoxel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshingConfig {
    /// Cells are meshed only when all eight corners carry at least this weight.
    pub min_tsdf_weight: f32,
    /// Search radius, in voxels, for a vertex's nearest fused feature.
    pub feature_query_radius_voxels: u32,
}

impl Default for MeshingConfig {
    fn default() -> Self {
        Self {
            min_tsdf_weight: 1.0,
            feature_query_radius_voxels: 2,
        }
    }
}

impl MeshingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_tsdf_weight >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "min_tsdf_weight must be non-negative, got {}",
                self.min_tsdf_weight
            )));
        }
        Ok(())
    }
}

/// Vertices and triangles of the TSDF zero crossing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[u32; 3]>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MeshStats {
    pub cells_meshed: usize,
    pub vertices_extracted: usize,
    pub vertices_dropped: usize,
    pub triangles: usize,
}

/// Runs marching cubes over every cell whose eight corner voxels are
/// observed with weight at least `min_tsdf_weight`.
///
/// Cells are keyed by their minimum-corner voxel and visited in layer
/// iteration order. Vertices shared between cells are emitted once, in order
/// of first appearance (cell, then edge number). Corners with distance
/// exactly zero count as inside.
pub fn marching_cubes(tsdf: &TsdfLayer, min_tsdf_weight: f32) -> (SurfaceMesh, usize) {
    let voxel_size = tsdf.spec().voxel_size_m();
    let mut mesh = SurfaceMesh::default();
    let mut edge_vertex: HashMap<(GlobalIndex, usize), u32> = HashMap::new();
    let mut cells_meshed = 0;

    for (g, v0) in tsdf.iter_voxels() {
        if !(v0.is_observed() && v0.weight >= min_tsdf_weight) {
            continue;
        }
        let mut corners = [TsdfVoxel::default(); 8];
        let complete =
            CORNERS
                .iter()
                .zip(corners.iter_mut())
                .all(|(o, c)| match tsdf.voxel(g.offset(o[0], o[1], o[2])) {
                    Some(v) if v.is_observed() && v.weight >= min_tsdf_weight => {
                        *c = *v;
                        true
                    }
                    _ => false,
                });
        if !complete {
            continue;
        }
        let case = corners.iter().enumerate().fold(
            0usize,
            |acc, (i, c)| if c.distance <= 0.0 { acc | (1 << i) } else { acc },
        );
        let crossings = EDGE_TABLE[case];
        if crossings == 0 {
            continue;
        }
        cells_meshed += 1;

        let mut local = [u32::MAX; 12];
        for (e, [a, b]) in EDGES.iter().enumerate() {
            if crossings & (1 << e) == 0 {
                continue;
            }
            // Orient every edge from its lower to its upper corner so shared
            // edges produce identical vertices from every cell.
            let (lo, hi) = if CORNERS[*a] < CORNERS[*b] { (*a, *b) } else { (*b, *a) };
            let axis = (0..3).find(|&i| CORNERS[lo][i] != CORNERS[hi][i]).unwrap_or(0);
            let o = CORNERS[lo];
            let lo_index = g.offset(o[0], o[1], o[2]);
            let id = *edge_vertex.entry((lo_index, axis)).or_insert_with(|| {
                let d_lo = corners[lo].distance as f64;
                let d_hi = corners[hi].distance as f64;
                let t = d_lo / (d_lo - d_hi);
                let mut p = lo_index.center(voxel_size);
                p[axis] += t * voxel_size;
                mesh.vertices.push(p);
                (mesh.vertices.len() - 1) as u32
            });
            local[e] = id;
        }
        for tri in TRI_TABLE[case].chunks(3).take_while(|t| t[0] >= 0) {
            mesh.triangles
                .push([local[tri[0] as usize], local[tri[1] as usize], local[tri[2] as usize]]);
        }
    }
    (mesh, cells_meshed)
}

/// Surface vertices tagged with their nearest fused feature.
///
/// Triangles are discarded. Vertices without an observed feature within the
/// configured radius are dropped. A feature layer that has never received a
/// frame yields the bare vertices with zero-width features.
pub fn extract_feature_mesh(
    tsdf: &TsdfLayer,
    features: &FeatureLayer,
    config: &MeshingConfig,
) -> Result<(FeaturePointCloud, MeshStats)> {
    config.validate()?;
    if tsdf.spec() != features.spec() {
        return Err(Error::GridSpecMismatch);
    }
    let (mesh, cells_meshed) = marching_cubes(tsdf, config.min_tsdf_weight);
    let mut stats = MeshStats {
        cells_meshed,
        vertices_extracted: mesh.vertices.len(),
        vertices_dropped: 0,
        triangles: mesh.triangles.len(),
    };

    let Some(dim) = features.feature_dim() else {
        let points = mesh.vertices.iter().map(to_f32).collect();
        return Ok((FeaturePointCloud::from_parts(points, Vec::new(), 0)?, stats));
    };

    let radius = config.feature_query_radius_voxels;
    let tagged: Vec<Option<&[f32]>> = mesh
        .vertices
        .par_iter()
        .map(|p| query_nearest_feature(features, p, radius))
        .collect();
    let mut cloud = FeaturePointCloud::new(dim);
    for (p, f) in mesh.vertices.iter().zip(tagged) {
        match f {
            Some(f) => cloud.push(to_f32(p), f),
            None => stats.vertices_dropped += 1,
        }
    }
    Ok((cloud, stats))
}

fn to_f32(p: &Point3<f64>) -> [f32; 3] {
    [p.x as f32, p.y as f32, p.z as f32]
}

/// Fractions within this many voxels of a lattice plane snap onto it.
const SNAP: f64 = 1e-5;

/// Trilinear interpolation of the TSDF at `p` over the surrounding voxel
/// centers. `None` if a corner with non-zero interpolation weight is
/// unobserved.
pub fn interpolate_tsdf(tsdf: &TsdfLayer, p: &Point3<f64>) -> Option<f64> {
    let voxel_size = tsdf.spec().voxel_size_m();
    let mut base = [0i64; 3];
    let mut frac = [0f64; 3];
    for a in 0..3 {
        let x = p[a] / voxel_size - 0.5;
        let mut b = x.floor();
        let mut f = x - b;
        if f > 1.0 - SNAP {
            b += 1.0;
            f = 0.0;
        } else if f < SNAP {
            f = 0.0;
        }
        base[a] = b as i64;
        frac[a] = f;
    }
    let origin = GlobalIndex(base);
    let mut value = 0.0;
    for o in CORNERS {
        let w: f64 = (0..3)
            .map(|a| if o[a] == 1 { frac[a] } else { 1.0 - frac[a] })
            .product();
        if w == 0.0 {
            continue;
        }
        let v = tsdf.voxel(origin.offset(o[0], o[1], o[2]))?;
        if !v.is_observed() {
            return None;
        }
        value += w * v.distance as f64;
    }
    Some(value)
}
