//! Two-stage RANSAC ground-plane estimation.
//!
//! Stage one fits a coarse plane on low points; stage two refits on the
//! stage-one inliers with a tighter threshold. Each fit takes the minimal
//! sample with the most inliers and refines it by principal-component least
//! squares over those inliers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::{lit, to_f64, Real};
use crate::types::{Frame, Plane, Point3, PointCloud};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundError {
    #[error("plane fitting needs at least 3 points, got {0}")]
    InsufficientPoints(usize),
    #[error("every minimal sample was degenerate")]
    NoModelFound,
    #[error("ground plane not found: inlier fraction {fraction:.4} below minimum {minimum:.4}")]
    GroundNotFound { fraction: f64, minimum: f64 },
    #[error("invalid RANSAC configuration: {0}")]
    InvalidConfig(String),
    #[error("expected a camera-frame cloud")]
    WrongFrame,
}

/// Parameters of the two-stage ground fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig<T> {
    pub iterations: usize,
    /// Stage-one inlier distance (meters).
    pub inlier_threshold: T,
    /// Stage-two inlier distance (meters), at most `inlier_threshold`.
    pub stage2_threshold: T,
    /// Only points whose height above the frame origin is at most this value
    /// enter stage one. Height is measured along camera up (-y).
    pub height_prior: T,
    pub min_inlier_fraction: T,
    pub seed: u64,
}

impl<T: Real> Default for RansacConfig<T> {
    fn default() -> Self {
        Self {
            iterations: 500,
            inlier_threshold: lit(0.15),
            stage2_threshold: lit(0.08),
            // 1.0 m below the sensor, widened 0.5 m upward
            height_prior: lit(-0.5),
            min_inlier_fraction: lit(0.05),
            seed: 0,
        }
    }
}

impl<T: Real> RansacConfig<T> {
    pub fn validate(&self) -> Result<(), GroundError> {
        let bad = |m: &str| Err(GroundError::InvalidConfig(m.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be >= 1");
        }
        if !(self.inlier_threshold > T::zero()) || !(self.stage2_threshold > T::zero()) {
            return bad("thresholds must be positive");
        }
        if self.stage2_threshold > self.inlier_threshold {
            return bad("stage2_threshold must not exceed inlier_threshold");
        }
        if !self.height_prior.is_finite() {
            return bad("height_prior must be finite");
        }
        if !(self.min_inlier_fraction > T::zero() && self.min_inlier_fraction <= T::one()) {
            return bad("min_inlier_fraction must lie in (0, 1]");
        }
        Ok(())
    }
}

/// A fitted plane and the indices (into the fitted slice) of its inliers.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit<T> {
    pub plane: Plane<T>,
    pub inliers: Vec<usize>,
}

/// Single-stage RANSAC with least-squares refinement.
///
/// The returned plane faces the frame origin whenever the origin is off the
/// plane. `inliers` are those of the winning minimal sample.
pub fn fit_plane_ransac<T: Real>(
    points: &[Point3<T>],
    threshold: T,
    iterations: usize,
    seed: u64,
) -> Result<PlaneFit<T>, GroundError> {
    if points.len() < 3 {
        return Err(GroundError::InsufficientPoints(points.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = points.iter().map(|p| p.norm()).fold(T::zero(), T::max).max(T::one());
    let min_cross = T::degeneracy_eps() * scale * scale;

    let mut best: Option<(Plane<T>, usize)> = None;
    for _ in 0..iterations {
        let s = rand::seq::index::sample(&mut rng, points.len(), 3);
        let (a, b, c) = (points[s.index(0)], points[s.index(1)], points[s.index(2)]);
        let n = (b - a).cross(&(c - a));
        if n.norm() <= min_cross {
            continue;
        }
        let Ok(plane) = Plane::from_unnormalized(n, -n.dot(&a)) else {
            continue;
        };
        let count = points
            .iter()
            .filter(|p| plane.signed_distance(p).abs() <= threshold)
            .count();
        if best.as_ref().is_none_or(|(_, c)| count > *c) {
            best = Some((plane, count));
        }
    }
    let (sample_plane, _) = best.ok_or(GroundError::NoModelFound)?;
    let inliers: Vec<usize> = (0..points.len())
        .filter(|&i| sample_plane.signed_distance(&points[i]).abs() <= threshold)
        .collect();
    let subset: Vec<Point3<T>> = inliers.iter().map(|&i| points[i]).collect();
    let plane = least_squares_plane(&subset)
        .unwrap_or(sample_plane)
        .oriented_towards(&Point3::zero());
    Ok(PlaneFit { plane, inliers })
}

/// Total-least-squares plane: normal is the smallest-eigenvalue eigenvector
/// of the covariance, passing through the centroid.
pub fn least_squares_plane<T: Real>(points: &[Point3<T>]) -> Option<Plane<T>> {
    if points.len() < 3 {
        return None;
    }
    let inv_n = T::one() / T::from_usize(points.len())?;
    let centroid = points.iter().fold(Point3::zero(), |acc, p| acc + *p).scale(inv_n);
    let mut cov = [[T::zero(); 3]; 3];
    for p in points {
        let d = (*p - centroid).to_array();
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    let (values, vectors) = symmetric_eigen3(cov);
    let k = (0..3).min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal))?;
    let n = Point3::new(vectors[0][k], vectors[1][k], vectors[2][k]);
    Plane::from_unnormalized(n, -n.dot(&centroid)).ok()
}

/// Cyclic Jacobi eigen-decomposition of a symmetric 3x3 matrix.
/// Returns eigenvalues and a matrix whose columns are the eigenvectors.
fn symmetric_eigen3<T: Real>(mut a: [[T; 3]; 3]) -> ([T; 3], [[T; 3]; 3]) {
    let (o, z) = (T::one(), T::zero());
    let mut v = [[o, z, z], [z, o, z], [z, z, o]];
    for _ in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        let diag = a[0][0].abs() + a[1][1].abs() + a[2][2].abs();
        if off <= T::epsilon() * diag || off == T::zero() {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == T::zero() {
                continue;
            }
            let two = o + o;
            let theta = (a[q][q] - a[p][p]) / (two * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + o).sqrt());
            let c = o / (t * t + o).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2]], v)
}

/// Ground plane and ground point indices (into the input cloud).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundFit<T> {
    pub plane: Plane<T>,
    pub ground: Vec<usize>,
}

/// Two-stage ground fit on a camera-frame cloud.
pub fn two_stage_ground<T: Real>(pc: &PointCloud<T>, cfg: &RansacConfig<T>) -> Result<GroundFit<T>, GroundError> {
    cfg.validate()?;
    if pc.frame() != Frame::Camera {
        return Err(GroundError::WrongFrame);
    }
    let total = pc.len();
    let not_found = |count: usize| GroundError::GroundNotFound {
        fraction: if total == 0 { 0.0 } else { count as f64 / total as f64 },
        minimum: to_f64(cfg.min_inlier_fraction),
    };

    let candidates: Vec<usize> = (0..total).filter(|&i| -pc.points()[i].y <= cfg.height_prior).collect();
    let stage1_pts: Vec<Point3<T>> = candidates.iter().map(|&i| pc.points()[i]).collect();
    let stage1 = match fit_plane_ransac(&stage1_pts, cfg.inlier_threshold, cfg.iterations, cfg.seed) {
        Ok(f) => f,
        Err(GroundError::InsufficientPoints(_)) | Err(GroundError::NoModelFound) => return Err(not_found(0)),
        Err(e) => return Err(e),
    };
    let stage1_idx: Vec<usize> = stage1.inliers.iter().map(|&k| candidates[k]).collect();
    let stage2_pts: Vec<Point3<T>> = stage1_idx.iter().map(|&i| pc.points()[i]).collect();
    let stage2 = match fit_plane_ransac(
        &stage2_pts,
        cfg.stage2_threshold,
        cfg.iterations,
        cfg.seed.wrapping_add(1),
    ) {
        Ok(f) => f,
        Err(GroundError::InsufficientPoints(_)) | Err(GroundError::NoModelFound) => return Err(not_found(0)),
        Err(e) => return Err(e),
    };
    let ground: Vec<usize> = stage2.inliers.iter().map(|&k| stage1_idx[k]).collect();
    let fraction =
        T::from_usize(ground.len()).unwrap_or_else(T::zero) / T::from_usize(total.max(1)).unwrap_or_else(T::one);
    if fraction < cfg.min_inlier_fraction {
        return Err(not_found(ground.len()));
    }
    Ok(GroundFit {
        plane: stage2.plane.oriented_towards(&Point3::zero()),
        ground,
    })
}
