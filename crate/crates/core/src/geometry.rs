//! Rigid transforms, pinhole projection and hidden-point removal.
//!
//! Camera convention: +z forward, +x right, +y down, so projected rows grow
//! downward like image rows.

use thiserror::Error;

use crate::hull::hull_vertices;
use crate::scalar::{lit, Real};
use crate::types::{CameraIntrinsics, Extrinsics, Frame, Point3, PointCloud};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point lies behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("expected a cloud in the {expected:?} frame, got {got:?}")]
    FrameMismatch { expected: Frame, got: Frame },
    #[error("hidden-point removal needs a non-empty cloud")]
    EmptyCloud,
    #[error("point {0} coincides with the viewpoint")]
    PointAtViewpoint(usize),
    #[error("hidden-point removal radius factor must be positive, got {0}")]
    InvalidGamma(f64),
    #[error("points and viewpoint do not span three dimensions")]
    DegenerateHull,
}

/// Real-valued pixel coordinate (u right, v down).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord<T> {
    pub u: T,
    pub v: T,
}

/// Maps a sensor-frame cloud into the camera frame, preserving order.
pub fn transform_to_camera<T: Real>(pc: &PointCloud<T>, ext: &Extrinsics<T>) -> Result<PointCloud<T>, GeometryError> {
    if pc.frame() != Frame::Sensor {
        return Err(GeometryError::FrameMismatch {
            expected: Frame::Sensor,
            got: pc.frame(),
        });
    }
    let points = pc.points().iter().map(|p| ext.apply(p)).collect();
    Ok(PointCloud::new(points, Frame::Camera).expect("rigid transform of finite points is finite"))
}

/// Pinhole projection of a camera-frame point.
pub fn project_point<T: Real>(intr: &CameraIntrinsics<T>, p: &Point3<T>) -> Result<PixelCoord<T>, GeometryError> {
    if p.z <= lit(1e-9) {
        return Err(GeometryError::BehindCamera(crate::scalar::to_f64(p.z)));
    }
    Ok(PixelCoord {
        u: intr.fx * p.x / p.z + intr.cx,
        v: intr.fy * p.y / p.z + intr.cy,
    })
}

/// Camera-frame ray direction (unnormalized, z = 1) through pixel `(u, v)`.
pub fn pixel_ray<T: Real>(intr: &CameraIntrinsics<T>, u: T, v: T) -> Point3<T> {
    Point3::new((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, T::one())
}

/// Indices of the camera-frame points visible from the camera origin.
///
/// Uses spherical flipping with radius `gamma * max |p|`: a point is kept
/// when its flipped image is a vertex of the convex hull of all flipped
/// points together with the origin. Clouds of one or two points are returned
/// whole, since no surface can occlude them.
pub fn remove_hidden_points<T: Real>(pc: &PointCloud<T>, gamma: T) -> Result<Vec<usize>, GeometryError> {
    if pc.frame() != Frame::Camera {
        return Err(GeometryError::FrameMismatch {
            expected: Frame::Camera,
            got: pc.frame(),
        });
    }
    visible_from(pc.points(), &Point3::zero(), gamma)
}

/// Hidden-point removal for an arbitrary viewpoint.
pub fn visible_from<T: Real>(
    points: &[Point3<T>],
    viewpoint: &Point3<T>,
    gamma: T,
) -> Result<Vec<usize>, GeometryError> {
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(GeometryError::InvalidGamma(crate::scalar::to_f64(gamma)));
    }
    if points.is_empty() {
        return Err(GeometryError::EmptyCloud);
    }
    let rel: Vec<Point3<T>> = points.iter().map(|p| *p - *viewpoint).collect();
    let mut max_norm = T::zero();
    for (i, p) in rel.iter().enumerate() {
        let n = p.norm();
        if !(n > T::zero()) {
            return Err(GeometryError::PointAtViewpoint(i));
        }
        max_norm = max_norm.max(n);
    }
    if rel.len() <= 2 {
        return Ok((0..rel.len()).collect());
    }
    let radius = gamma * max_norm;
    let two = T::one() + T::one();
    let mut flipped: Vec<Point3<T>> = rel
        .iter()
        .map(|p| {
            let n = p.norm();
            *p + p.scale(two * (radius - n) / n)
        })
        .collect();
    flipped.push(Point3::zero());
    let origin = flipped.len() - 1;
    let verts = hull_vertices(&flipped).map_err(|_| GeometryError::DegenerateHull)?;
    Ok(verts.into_iter().filter(|&i| i != origin).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: Vec<Point3<f64>>, frame: Frame) -> PointCloud<f64> {
        PointCloud::new(points, frame).unwrap()
    }

    fn intr() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(100.0, 100.0, 320.0, 240.0, 640, 480).unwrap()
    }

    #[test]
    fn identity_transform_is_noop() {
        let pts = vec![Point3::new(1.0, 2.0, 3.0), Point3::new(-4.0, 0.5, 9.0)];
        let out = transform_to_camera(&cloud(pts.clone(), Frame::Sensor), &Extrinsics::identity()).unwrap();
        assert_eq!(out.points(), &pts[..]);
        assert_eq!(out.frame(), Frame::Camera);
    }

    #[test]
    fn pure_translation() {
        let r = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let ext = Extrinsics::new(r, Point3::new(0.0, 0.0, 5.0)).unwrap();
        let out = transform_to_camera(&cloud(vec![Point3::new(1.0, 2.0, 3.0)], Frame::Sensor), &ext).unwrap();
        assert_eq!(out.points()[0], Point3::new(1.0, 2.0, 8.0));
    }

    #[test]
    fn rotation_about_z() {
        let r = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        let ext = Extrinsics::new(r, Point3::zero()).unwrap();
        let out = transform_to_camera(&cloud(vec![Point3::new(1.0, 0.0, 0.0)], Frame::Sensor), &ext).unwrap();
        assert_eq!(out.points()[0], Point3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn transform_requires_sensor_frame() {
        let c = cloud(vec![Point3::new(1.0, 0.0, 0.0)], Frame::Camera);
        assert!(matches!(
            transform_to_camera(&c, &Extrinsics::identity()),
            Err(GeometryError::FrameMismatch { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let p = project_point(&intr(), &Point3::new(0.0, 0.0, 10.0)).unwrap();
        assert_eq!((p.u, p.v), (320.0, 240.0));
        let p = project_point(&intr(), &Point3::new(1.0, 0.0, 10.0)).unwrap();
        assert_eq!((p.u, p.v), (330.0, 240.0));
        assert!(matches!(
            project_point(&intr(), &Point3::new(0.0, 0.0, -1.0)),
            Err(GeometryError::BehindCamera(_))
        ));
        assert!(project_point(&intr(), &Point3::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn projection_is_generic_over_f32() {
        let k = CameraIntrinsics::<f32>::new(100.0, 100.0, 320.0, 240.0, 640, 480).unwrap();
        let p = project_point(&k, &Point3::new(1.0f32, 0.0, 10.0)).unwrap();
        assert_eq!(p.u, 330.0f32);
    }

    #[test]
    fn pixel_ray_inverts_projection() {
        let r = pixel_ray(&intr(), 330.0, 250.0);
        let p = project_point(&intr(), &r.scale(7.0)).unwrap();
        assert!((p.u - 330.0).abs() < 1e-9 && (p.v - 250.0).abs() < 1e-9);
    }

    #[test]
    fn hpr_single_and_pair() {
        let one = cloud(vec![Point3::new(3.0, -1.0, 4.0)], Frame::Camera);
        assert_eq!(remove_hidden_points(&one, 1.0).unwrap(), vec![0]);
        let two = cloud(
            vec![Point3::new(0.0, 0.0, 2.0), Point3::new(0.0, 0.0, 10.0)],
            Frame::Camera,
        );
        assert_eq!(remove_hidden_points(&two, 1.0).unwrap(), vec![0, 1]);
    }

    #[test]
    fn hpr_errors() {
        let c = cloud(vec![], Frame::Camera);
        assert_eq!(remove_hidden_points(&c, 1.0), Err(GeometryError::EmptyCloud));
        let c = cloud(vec![Point3::new(0.0, 0.0, 1.0)], Frame::Camera);
        assert!(matches!(
            remove_hidden_points(&c, 0.0),
            Err(GeometryError::InvalidGamma(_))
        ));
        let c = cloud(vec![Point3::zero(), Point3::new(0.0, 0.0, 1.0)], Frame::Camera);
        assert_eq!(remove_hidden_points(&c, 1.0), Err(GeometryError::PointAtViewpoint(0)));
        // all points on a plane through the viewpoint
        let flat: Vec<_> = (1..10)
            .map(|i| Point3::new(i as f64, 0.0, (i * i) as f64 + 1.0))
            .collect();
        assert_eq!(
            remove_hidden_points(&cloud(flat, Frame::Camera), 1.0),
            Err(GeometryError::DegenerateHull)
        );
    }

    #[test]
    fn hpr_removes_points_behind_wall() {
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                let x = -2.0 + 4.0 * i as f64 / 19.0;
                let y = -2.0 + 4.0 * j as f64 / 19.0;
                pts.push(Point3::new(x, y, 5.0));
            }
        }
        let wall = pts.len();
        for i in 0..10 {
            for j in 0..10 {
                let x = -0.5 + i as f64 / 9.0;
                let y = -0.5 + j as f64 / 9.0;
                pts.push(Point3::new(x, y, 10.0));
            }
        }
        let vis = remove_hidden_points(&cloud(pts, Frame::Camera), 1.0).unwrap();
        let hidden_kept = vis.iter().filter(|&&i| i >= wall).count();
        assert!(hidden_kept <= 1, "{hidden_kept} of 100 occluded points kept");
    }
}
