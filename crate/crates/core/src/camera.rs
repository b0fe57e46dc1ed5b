//! Pinhole camera model and rigid poses.
//!
//! Pixel `(u, v)` with integer coordinates addresses the pixel center;
//! `u` runs along image columns and `v` along rows.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx.is_finite() && self.fy.is_finite() && self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::InvalidIntrinsics("principal point must be finite".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidIntrinsics(format!(
                "image size must be non-zero, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Pixel coordinates of a camera-frame point.
    pub fn project(&self, p_cam: &Point3<f64>) -> Result<(f64, f64)> {
        if !(p_cam.z > 0.0) {
            return Err(Error::BehindCamera { z: p_cam.z });
        }
        Ok(self.project_unchecked(p_cam))
    }

    #[inline]
    pub(crate) fn project_unchecked(&self, p_cam: &Point3<f64>) -> (f64, f64) {
        (
            self.fx * p_cam.x / p_cam.z + self.cx,
            self.fy * p_cam.y / p_cam.z + self.cy,
        )
    }

    /// Camera-frame point at pixel `(u, v)` and depth `depth` along +Z.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Result<Point3<f64>> {
        if !(depth > 0.0) {
            return Err(Error::NonPositiveDepth(depth));
        }
        Ok(Point3::new(
            (u - self.cx) / self.fx * depth,
            (v - self.cy) / self.fy * depth,
            depth,
        ))
    }

    /// Nearest pixel `(col, row)` to sub-pixel coordinates, or `None`
    /// outside the image. Pixel `i` owns `[i - 0.5, i + 0.5)`.
    #[inline]
    pub fn nearest_pixel(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        let col = (u + 0.5).floor();
        let row = (v + 0.5).floor();
        if col >= 0.0 && row >= 0.0 && col < self.width as f64 && row < self.height as f64 {
            Some((col as usize, row as usize))
        } else {
            None
        }
    }

    /// Intrinsics of the same camera resampled to `width` x `height`.
    ///
    /// Pixel edges are preserved, so the image extent maps onto itself.
    pub fn scaled_to(&self, width: usize, height: usize) -> Intrinsics {
        if width == self.width && height == self.height {
            return *self;
        }
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Intrinsics {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: (self.cx + 0.5) * sx - 0.5,
            cy: (self.cy + 0.5) * sy - 0.5,
            width,
            height,
        }
    }
}

/// Rigid transform. Used as world-from-camera throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPose("non-finite entries".into()));
        }
        let err = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if err > ORTHONORMAL_TOL {
            return Err(Error::InvalidPose(format!(
                "rotation is not orthonormal (max |RᵀR - I| = {err:.3e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidPose(format!("rotation determinant is {det}")));
        }
        Ok(Self { rotation, translation })
    }

    /// From a 4x4 homogeneous matrix in row-major order.
    pub fn from_row_major(m: &[f64]) -> Result<Self> {
        if m.len() != 16 {
            return Err(Error::InvalidPose(format!("expected 16 values, got {}", m.len())));
        }
        let bottom = [m[12], m[13], m[14], m[15]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::InvalidPose(format!(
                "bottom row must be [0, 0, 0, 1], got {bottom:?}"
            )));
        }
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        Self::new(rotation, Vector3::new(m[3], m[7], m[11]))
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            t.x,
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            t.y,
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.z,
            0.0,
            0.0,
            0.0,
            1.0,
        ]
    }

    /// Camera at `eye` looking at `target`, camera +Y pointing roughly
    /// along `-up` (image rows grow downwards).
    pub fn look_at(eye: Point3<f64>, target: Point3<f64>, up: Vector3<f64>) -> Result<Self> {
        let forward = target - eye;
        if forward.norm() == 0.0 {
            return Err(Error::InvalidPose("eye and target coincide".into()));
        }
        let z = forward.normalize();
        let x = z.cross(&-up);
        if x.norm() < 1e-9 {
            return Err(Error::InvalidPose("up vector is parallel to the view direction".into()));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let rotation = Matrix3::from_columns(&[x, y, z]);
        Self::new(rotation, eye.coords)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    #[inline]
    pub fn transform(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};
    use proptest::prelude::*;

    fn k() -> Intrinsics {
        Intrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap()
    }

    #[test]
    fn project_examples() {
        assert_eq!(k().project(&Point3::new(0.0, 0.0, 1.0)).unwrap(), (50.0, 50.0));
        assert_eq!(k().project(&Point3::new(0.5, 0.0, 1.0)).unwrap(), (100.0, 50.0));
        assert!(matches!(
            k().project(&Point3::new(0.0, 0.0, -1.0)),
            Err(Error::BehindCamera { .. })
        ));
        assert!(k().project(&Point3::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn unproject_examples() {
        assert_eq!(k().unproject(50.0, 50.0, 2.0).unwrap(), Point3::new(0.0, 0.0, 2.0));
        assert_eq!(k().unproject(0.0, 0.0, 1.0).unwrap(), Point3::new(-0.5, -0.5, 1.0));
        assert!(k().unproject(1.0, 1.0, 0.0).is_err());
        assert!(k().unproject(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn intrinsics_validation() {
        assert!(Intrinsics::new(0.0, 1.0, 0.0, 0.0, 1, 1).is_err());
        assert!(Intrinsics::new(1.0, 1.0, 0.0, 0.0, 0, 1).is_err());
    }

    #[test]
    fn nearest_pixel_bounds() {
        let k = Intrinsics::new(1.0, 1.0, 0.0, 0.0, 4, 3).unwrap();
        assert_eq!(k.nearest_pixel(0.0, 0.0), Some((0, 0)));
        assert_eq!(k.nearest_pixel(-0.5, 0.0), Some((0, 0)));
        assert_eq!(k.nearest_pixel(-0.51, 0.0), None);
        assert_eq!(k.nearest_pixel(2.5, 1.49), Some((3, 1)));
        assert_eq!(k.nearest_pixel(3.49, 2.49), Some((3, 2)));
        assert_eq!(k.nearest_pixel(3.5, 0.0), None);
        assert_eq!(k.nearest_pixel(0.0, 2.5), None);
    }

    #[test]
    fn scaling_preserves_image_extent() {
        let k = Intrinsics::new(100.0, 80.0, 31.5, 23.5, 64, 48).unwrap();
        assert_eq!(k.scaled_to(64, 48), k);
        let half = k.scaled_to(32, 24);
        assert_eq!((half.fx, half.fy), (50.0, 40.0));
        // The optical axis stays at the image center.
        assert_eq!((half.cx, half.cy), (15.5, 11.5));
        // Left edge of pixel 0 maps to left edge of pixel 0.
        let p = k.unproject(-0.5, -0.5, 1.0).unwrap();
        let (u, v) = half.project(&p).unwrap();
        assert!((u + 0.5).abs() < 1e-12 && (v + 0.5).abs() < 1e-12);
    }

    #[test]
    fn row_major_round_trip() {
        let r = Rotation3::from_euler_angles(0.1, -0.4, 1.2);
        let pose = Pose::new(*r.matrix(), Vector3::new(1.0, -2.0, 0.5)).unwrap();
        let back = Pose::from_row_major(&pose.to_row_major()).unwrap();
        assert_eq!(pose, back);
    }

    #[test]
    fn pose_validation() {
        let mut m = Pose::identity().to_row_major();
        m[0] = 2.0;
        assert!(Pose::from_row_major(&m).is_err());
        let mut m = Pose::identity().to_row_major();
        m[0] = -1.0; // reflection
        assert!(Pose::from_row_major(&m).is_err());
        let mut m = Pose::identity().to_row_major();
        m[14] = 1.0;
        assert!(Pose::from_row_major(&m).is_err());
        assert!(Pose::from_row_major(&[0.0; 12]).is_err());
    }

    #[test]
    fn look_at_points_z_at_target() {
        let eye = Point3::new(1.0, 2.0, 3.0);
        let target = Point3::new(0.0, 0.0, 0.0);
        let pose = Pose::look_at(eye, target, Vector3::z()).unwrap();
        let p_cam = pose.inverse().transform(&target);
        assert!(p_cam.x.abs() < 1e-12 && p_cam.y.abs() < 1e-12);
        assert!((p_cam.z - eye.coords.norm()).abs() < 1e-12);
    }

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (
            prop::array::uniform3(-1.0f64..1.0),
            -3.0f64..3.0,
            prop::array::uniform3(-5.0f64..5.0),
        )
            .prop_filter_map("degenerate axis", |(axis, angle, t)| {
                let axis = Vector3::from(axis);
                (axis.norm() > 1e-3).then(|| {
                    let r = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
                    Pose::new(*r.matrix(), Vector3::from(t)).unwrap()
                })
            })
    }

    proptest! {
        #[test]
        fn unproject_project_round_trip(u in -10.0f64..110.0, v in -10.0f64..110.0, d in 0.05f64..20.0) {
            let p = k().unproject(u, v, d).unwrap();
            let (u2, v2) = k().project(&p).unwrap();
            prop_assert!((u - u2).abs() < 1e-6 && (v - v2).abs() < 1e-6);
        }

        #[test]
        fn inverse_round_trip(pose in arb_pose(), p in prop::array::uniform3(-10.0f64..10.0)) {
            let p = Point3::from(p);
            let q = pose.inverse().transform(&pose.transform(&p));
            prop_assert!((q - p).norm() < 1e-9);
            let ii = pose.inverse().inverse();
            prop_assert!((ii.transform(&p) - pose.transform(&p)).norm() < 1e-9);
        }

        #[test]
        fn compose_is_associative(a in arb_pose(), b in arb_pose(), c in arb_pose(),
                                  p in prop::array::uniform3(-10.0f64..10.0)) {
            let p = Point3::from(p);
            let lhs = a.compose(&b).compose(&c).transform(&p);
            let rhs = a.compose(&b.compose(&c)).transform(&p);
            prop_assert!((lhs - rhs).norm() < 1e-9);
            let seq = a.transform(&b.transform(&c.transform(&p)));
            prop_assert!((lhs - seq).norm() < 1e-9);
        }
    }
}
