//! Pinhole camera geometry.
//!
//! Camera coordinates are metric with the optical axis along `+z`. Image
//! coordinates follow the raster convention: origin at the top-left corner,
//! `u` to the right and `v` downward. Projected points are never clamped to
//! the image bounds.

use nalgebra::{Point2, Point3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest depth (meters) accepted by the projection routines.
pub const DEPTH_EPSILON: f64 = 1e-6;

/// Image-plane point in pixels.
pub type ImagePoint<T> = Point2<T>;

/// Intrinsic parameters of an ideal pinhole camera with square pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics<T: Scalar> {
    focal_length_m: T,
    pixel_size_m: T,
    principal_point_px: Vector2<T>,
}

/// A length (3D meters or image pixels) together with its rate of change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtentPair<T> {
    pub length: T,
    pub rate: T,
}

impl<T: Scalar> ExtentPair<T> {
    pub fn new(length: T, rate: T) -> Self {
        Self { length, rate }
    }
}

impl<T: Scalar> CameraIntrinsics<T> {
    pub fn new(focal_length_m: T, pixel_size_m: T, principal_point_px: Vector2<T>) -> Result<Self> {
        if !(focal_length_m > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "focal_length_m",
                reason: format!("must be > 0, got {focal_length_m}"),
            });
        }
        if !(pixel_size_m > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "pixel_size_m",
                reason: format!("must be > 0, got {pixel_size_m}"),
            });
        }
        let ratio = focal_length_m / pixel_size_m;
        if !ratio.is_finite() {
            return Err(Error::InvalidParameter {
                name: "pixel_size_m",
                reason: "focal length to pixel size ratio is not finite".into(),
            });
        }
        if !(principal_point_px.x.is_finite() && principal_point_px.y.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "principal_point_px",
                reason: "must be finite".into(),
            });
        }
        Ok(Self {
            focal_length_m,
            pixel_size_m,
            principal_point_px,
        })
    }

    /// Camera whose principal point sits at the image center.
    pub fn centered(focal_length_m: T, pixel_size_m: T, image_width: T, image_height: T) -> Result<Self> {
        let two = T::lit(2.0);
        Self::new(
            focal_length_m,
            pixel_size_m,
            Vector2::new(image_width / two, image_height / two),
        )
    }

    pub fn focal_length_m(&self) -> T {
        self.focal_length_m
    }

    pub fn pixel_size_m(&self) -> T {
        self.pixel_size_m
    }

    pub fn principal_point_px(&self) -> Vector2<T> {
        self.principal_point_px
    }

    /// Focal length expressed in pixels, `f / |px|`.
    pub fn focal_ratio(&self) -> T {
        self.focal_length_m / self.pixel_size_m
    }

    /// Image-plane scale `f / (|px| z)` at depth `z`, rejecting depths near the singularity.
    pub(crate) fn scale_at(&self, z: T) -> Result<T> {
        check_depth(z)?;
        Ok(self.focal_ratio() / z)
    }

    pub fn project_point(&self, p: &Point3<T>) -> Result<ImagePoint<T>> {
        let s = self.scale_at(p.z)?;
        Ok(Point2::new(p.x * s, p.y * s) + self.principal_point_px)
    }

    /// Image-plane velocity (px/s) of a point moving with velocity `v` (m/s).
    pub fn project_velocity(&self, p: &Point3<T>, v: &Vector3<T>) -> Result<Vector2<T>> {
        let s = self.scale_at(p.z)?;
        let recession = v.z / p.z;
        Ok(Vector2::new(v.x - recession * p.x, v.y - recession * p.y) * s)
    }

    /// Projects a fronto-parallel segment length and its rate at depth `z` receding at `vz`.
    pub fn project_extent(&self, ext: ExtentPair<T>, z: T, vz: T) -> Result<ExtentPair<T>> {
        let s = self.scale_at(z)?;
        Ok(ExtentPair {
            length: s * ext.length,
            rate: s * (ext.rate - vz / z * ext.length),
        })
    }

    /// Depth at which an object of metric height `mean_height_m` appears `height_px` tall.
    pub fn depth_from_height(&self, mean_height_m: T, height_px: T) -> Result<T> {
        if !(height_px > T::zero()) {
            return Err(Error::NonPositiveHeight {
                height: height_px.to_f64_lossy(),
            });
        }
        if !(mean_height_m > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "mean_height_m",
                reason: format!("must be > 0, got {mean_height_m}"),
            });
        }
        Ok(self.focal_ratio() * mean_height_m / height_px)
    }

    /// Inverse of [`project_point`](Self::project_point) for a known depth.
    pub fn backproject_point(&self, ip: &ImagePoint<T>, depth: T) -> Result<Point3<T>> {
        if !(depth > T::zero()) {
            return Err(Error::DepthNonPositive {
                depth: depth.to_f64_lossy(),
            });
        }
        let k = depth / self.focal_ratio();
        let d = ip - Point2::from(self.principal_point_px);
        Ok(Point3::new(d.x * k, d.y * k, depth))
    }
}

pub(crate) fn check_depth<T: Scalar>(z: T) -> Result<()> {
    if z > T::lit(DEPTH_EPSILON) {
        Ok(())
    } else {
        Err(Error::DepthNonPositive {
            depth: z.to_f64_lossy(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cam() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(1e-3, 1e-6, Vector2::new(960.0, 540.0)).unwrap()
    }

    #[test]
    fn rejects_bad_intrinsics() {
        assert!(CameraIntrinsics::new(0.0, 1e-6, Vector2::zeros()).is_err());
        assert!(CameraIntrinsics::new(1e-3, -1.0, Vector2::zeros()).is_err());
        assert!(CameraIntrinsics::new(1e-3, 1e-6, Vector2::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn centered_uses_half_image() {
        let c = CameraIntrinsics::centered(1e-3, 1e-6, 1920.0, 1080.0).unwrap();
        assert_eq!(c.principal_point_px(), Vector2::new(960.0, 540.0));
        assert_relative_eq!(c.focal_ratio(), 1000.0, max_relative = 1e-12);
    }

    #[test]
    fn project_point_examples() {
        let c = cam();
        let on_axis = c.project_point(&Point3::new(0.0, 0.0, 5.0)).unwrap();
        assert_eq!(on_axis, Point2::new(960.0, 540.0));
        let p = c.project_point(&Point3::new(1.0, 0.5, 2.0)).unwrap();
        assert_relative_eq!(p.x, 1460.0, max_relative = 1e-12);
        assert_relative_eq!(p.y, 790.0, max_relative = 1e-12);
        assert!(matches!(
            c.project_point(&Point3::new(0.0, 0.0, -1.0)),
            Err(Error::DepthNonPositive { .. })
        ));
        assert!(c.project_point(&Point3::new(0.0, 0.0, 1e-7)).is_err());
    }

    #[test]
    fn project_velocity_examples() {
        let c = cam();
        let still = c
            .project_velocity(&Point3::new(3.0, -1.0, 7.0), &Vector3::zeros())
            .unwrap();
        assert_eq!(still, Vector2::zeros());
        let receding = c
            .project_velocity(&Point3::new(1.0, 0.0, 2.0), &Vector3::new(0.0, 0.0, 1.0))
            .unwrap();
        assert_relative_eq!(receding.x, -250.0, max_relative = 1e-12);
        assert_eq!(receding.y, 0.0);
        let lateral = c
            .project_velocity(&Point3::new(0.0, 0.0, 2.0), &Vector3::new(1.0, 0.0, 0.0))
            .unwrap();
        assert_relative_eq!(lateral.x, 500.0, max_relative = 1e-12);
    }

    #[test]
    fn project_extent_examples() {
        let c = cam();
        let e = c.project_extent(ExtentPair::new(1.65, 0.0), 1.65, 0.0).unwrap();
        assert_relative_eq!(e.length, 1000.0, max_relative = 1e-12);
        assert_eq!(e.rate, 0.0);
        let e = c.project_extent(ExtentPair::new(1.65, 0.0), 2.0, 1.0).unwrap();
        assert_relative_eq!(e.length, 825.0, max_relative = 1e-12);
        assert_relative_eq!(e.rate, -412.5, max_relative = 1e-12);
        let e = c.project_extent(ExtentPair::new(0.0, 0.3), 4.0, 2.0).unwrap();
        assert_eq!(e.length, 0.0);
        assert!(c.project_extent(ExtentPair::new(1.0, 0.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn depth_from_height_examples() {
        let c = cam();
        assert_relative_eq!(c.depth_from_height(1.65, 1650.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(c.depth_from_height(1.65, 1000.0).unwrap(), 1.65, max_relative = 1e-12);
        assert!(matches!(
            c.depth_from_height(1.65, 0.0),
            Err(Error::NonPositiveHeight { .. })
        ));
    }

    #[test]
    fn backproject_examples() {
        let c = cam();
        let p = c.backproject_point(&Point2::new(960.0, 540.0), 5.0).unwrap();
        assert_eq!(p, Point3::new(0.0, 0.0, 5.0));
        let p = c.backproject_point(&Point2::new(1460.0, 790.0), 2.0).unwrap();
        assert_relative_eq!(p, Point3::new(1.0, 0.5, 2.0), max_relative = 1e-12);
        assert!(c.backproject_point(&Point2::new(1.0, 2.0), 0.0).is_err());
    }

    #[test]
    fn midpoint_and_scale_laws() {
        let c = cam();
        let a = Point3::new(0.3, -0.7, 4.0);
        let b = Point3::new(-1.1, 0.2, 4.0);
        let mid = c.project_point(&nalgebra::center(&a, &b)).unwrap();
        let pa = c.project_point(&a).unwrap();
        let pb = c.project_point(&b).unwrap();
        assert_relative_eq!(mid, nalgebra::center(&pa, &pb), max_relative = 1e-14);

        let pp = Point2::from(c.principal_point_px());
        let far = c.project_point(&Point3::new(a.x, a.y, 2.0 * a.z)).unwrap();
        assert_relative_eq!(far - pp, (pa - pp) / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn works_in_single_precision() {
        let c = CameraIntrinsics::<f32>::new(1e-3, 1e-6, Vector2::new(960.0, 540.0)).unwrap();
        let p = c.project_point(&Point3::new(1.0, 0.5, 2.0)).unwrap();
        assert_relative_eq!(p.x, 1460.0, max_relative = 1e-5);
    }
}
