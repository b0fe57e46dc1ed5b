use nalgebra::Point3;

use crate::error::{Error, Result};

/// N points with an N x f feature matrix, both row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeaturePointCloud {
    points: Vec<[f32; 3]>,
    features: Vec<f32>,
    feature_dim: usize,
}

impl FeaturePointCloud {
    pub fn new(feature_dim: usize) -> Self {
        Self {
            points: Vec::new(),
            features: Vec::new(),
            feature_dim,
        }
    }

    pub fn from_parts(points: Vec<[f32; 3]>, features: Vec<f32>, feature_dim: usize) -> Result<Self> {
        if features.len() != points.len() * feature_dim {
            return Err(Error::dims(
                "feature matrix",
                format!("{} x {}", points.len(), feature_dim),
                format!("{} values", features.len()),
            ));
        }
        if points.iter().flatten().chain(&features).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point cloud"));
        }
        Ok(Self {
            points,
            features,
            feature_dim,
        })
    }

    pub fn push(&mut self, point: [f32; 3], feature: &[f32]) {
        assert_eq!(feature.len(), self.feature_dim, "feature length must match the cloud");
        self.points.push(point);
        self.features.extend_from_slice(feature);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn points(&self) -> &[[f32; 3]] {
        &self.points
    }

    /// Flat row-major N x f matrix.
    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn point(&self, i: usize) -> [f32; 3] {
        self.points[i]
    }

    pub fn feature(&self, i: usize) -> &[f32] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    /// Rows `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut out = Self::new(self.feature_dim);
        out.points.reserve(indices.len());
        out.features.reserve(indices.len() * self.feature_dim);
        for &i in indices {
            out.push(self.points[i], self.feature(i));
        }
        out
    }

    /// Axis-aligned bounds, `None` for an empty cloud.
    pub fn bounding_box(&self) -> Option<([f32; 3], [f32; 3])> {
        let first = *self.points.first()?;
        Some(self.points.iter().fold((first, first), |(mut lo, mut hi), p| {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
            (lo, hi)
        }))
    }

    /// Index of the point nearest to `p` within `radius_m`; ties resolve to
    /// the lowest index.
    pub fn nearest_within(&self, p: &Point3<f64>, radius_m: f64) -> Option<usize> {
        let r2 = radius_m * radius_m;
        let mut best: Option<(f64, usize)> = None;
        for (i, q) in self.points.iter().enumerate() {
            let d2 = (Point3::new(q[0] as f64, q[1] as f64, q[2] as f64) - p).norm_squared();
            if d2 <= r2 && best.is_none_or(|(bd, _)| d2 < bd) {
                best = Some((d2, i));
            }
        }
        best.map(|(_, i)| i)
    }
}
