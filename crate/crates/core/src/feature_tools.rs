//! RGB-triplet features and PCA false-color rendering of feature clouds.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::image::{ColorImage, FeatureImage};

/// Per-pixel RGB triplets as a three-channel feature image. With
/// `normalize`, values are divided by the image's full-scale value.
pub fn rgb_feature_extractor(image: &ColorImage, normalize: bool) -> Result<FeatureImage> {
    if image.channels() != 3 {
        return Err(Error::dims("color channels", 3, image.channels()));
    }
    let scale = if normalize { image.scale().max_value() } else { 1.0 };
    let data = image.data().iter().map(|&v| v / scale).collect();
    FeatureImage::new(image.width(), image.height(), 3, data)
}

/// Eigenvalues below this fraction of the largest count as zero variance.
const RELATIVE_EIGEN_FLOOR: f64 = 1e-10;

/// Maps each row of an `n x dim` feature matrix to an RGB color in `[0, 1]`.
///
/// Features are mean-centered and projected onto the three leading principal
/// axes, each rescaled to `[0, 1]` over the cloud. A channel without variance
/// is set to 0.5. Axes are sign-fixed so that their largest-magnitude
/// loading is positive.
pub fn pca_colorize(features: &[f32], dim: usize) -> Result<Vec<[f32; 3]>> {
    if dim == 0 || !features.len().is_multiple_of(dim) || features.is_empty() {
        return Err(Error::dims(
            "feature matrix",
            "a non-empty n x dim matrix",
            format!("{} values with dim {}", features.len(), dim),
        ));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("features"));
    }
    let n = features.len() / dim;
    let mut x = DMatrix::from_row_iterator(n, dim, features.iter().map(|&v| v as f64));
    let mean = x.row_mean();
    for mut row in x.row_iter_mut() {
        row -= &mean;
    }

    let scores = principal_scores(&x, 3);
    let mut colors = vec![[0.5f32; 3]; n];
    for (channel, column) in scores.iter().enumerate() {
        let Some(column) = column else { continue };
        let (lo, hi) = column.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        let span = hi - lo;
        if !(span > 0.0) {
            continue;
        }
        for (c, &v) in colors.iter_mut().zip(column) {
            c[channel] = ((v - lo) / span) as f32;
        }
    }
    Ok(colors)
}

/// Projections of the centered rows of `x` onto up to `k` leading principal
/// axes; `None` for axes without variance.
fn principal_scores(x: &DMatrix<f64>, k: usize) -> Vec<Option<Vec<f64>>> {
    let (n, dim) = x.shape();
    // Eigenvectors of the dim x dim scatter matrix, or of the n x n Gram
    // matrix when there are fewer samples than dimensions.
    let use_gram = n < dim;
    let m = if use_gram { x * x.transpose() } else { x.transpose() * x };
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = order.first().map_or(0.0, |&i| eig.eigenvalues[i]);

    (0..k)
        .map(|rank| {
            let &i = order.get(rank)?;
            let lambda = eig.eigenvalues[i];
            if !(top > 0.0) || lambda <= RELATIVE_EIGEN_FLOOR * top {
                return None;
            }
            let v = eig.eigenvectors.column(i);
            let axis = if use_gram {
                // Feature-space axis is x^T u / |x^T u|.
                let a = x.transpose() * v;
                let norm = a.norm();
                a / norm
            } else {
                v.into_owned()
            };
            let pivot = axis.iter().enumerate().fold(
                (0, 0.0f64),
                |best, (j, &c)| if c.abs() > best.1.abs() { (j, c) } else { best },
            );
            let sign = if pivot.1 < 0.0 { -1.0 } else { 1.0 };
            Some((x * axis).iter().map(|s| sign * s).collect())
        })
        .collect()
}
