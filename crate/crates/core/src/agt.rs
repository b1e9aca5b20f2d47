//! Automated ground truth: LiDAR cloud plus calibration to a multi-layer
//! Stixel-World.
//!
//! Pipeline order: transform into the camera frame, two-stage ground fit,
//! hidden-point removal on the non-ground points, image-column binning,
//! per-column (range, height) clustering, and finally Stixel extraction
//! walking each column's clusters from near to far.

use thiserror::Error;

use crate::cluster::{bin_by_column, cluster_column_objects, ClusterError, DbscanConfig};
use crate::geometry::{pixel_ray, project_point, transform_to_camera, visible_from, GeometryError};
use crate::ground::{two_stage_ground, GroundError, RansacConfig};
use crate::scalar::{lit, Real};
use crate::types::{
    Calibration, CameraIntrinsics, GridSpec, InvariantError, Plane, Point3, PointCloud, Stixel, StixelType, StixelWorld,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgtError {
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error("stixel of {height} px is below the minimum of {min} px")]
    DegenerateStixel { height: i64, min: u32 },
    #[error("swib stixels need the top row of the preceding object")]
    MissingPrecedingRow,
    #[error("empty cluster")]
    EmptyCluster,
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("invalid AGT configuration: {0}")]
    InvalidConfig(String),
}

/// Parameters of the ground-truth pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgtConfig<T> {
    pub ransac: RansacConfig<T>,
    pub dbscan: DbscanConfig<T>,
    /// Spherical-flipping radius factor for hidden-point removal. Small
    /// factors also cull visible far surfaces in deep scenes, so the
    /// pipeline default is large.
    pub hpr_gamma: T,
    /// Clusters whose lowest point is within this height of the plane stand
    /// on the ground (meters).
    pub ground_attach_delta: T,
    pub min_stixel_height: u32,
    /// Stixel width in pixels.
    pub stride: u32,
    /// Points within this height of a cluster's maximum compete for the top
    /// point; the one projecting highest in the image wins (meters).
    pub top_band: T,
    /// A cluster whose lowest row lies within this many pixels of a nearer
    /// Stixel's top is seen over that Stixel.
    pub sightline_tolerance: u32,
}

impl<T: Real> Default for AgtConfig<T> {
    fn default() -> Self {
        Self {
            ransac: RansacConfig::default(),
            // vertical ring spacing on oblique surfaces exceeds 0.4 m
            // a dozen meters out
            dbscan: DbscanConfig {
                eps: lit(0.6),
                ..DbscanConfig::default()
            },
            hpr_gamma: lit(1000.0),
            ground_attach_delta: lit(0.3),
            min_stixel_height: 4,
            stride: 8,
            top_band: lit(0.1),
            sightline_tolerance: 16,
        }
    }
}

impl<T: Real> AgtConfig<T> {
    pub fn validate(&self) -> Result<(), AgtError> {
        self.ransac.validate()?;
        self.dbscan.validate()?;
        let bad = |m: &str| Err(AgtError::InvalidConfig(m.to_string()));
        if !(self.hpr_gamma > T::zero()) || !self.hpr_gamma.is_finite() {
            return bad("hpr_gamma must be positive");
        }
        if !(self.ground_attach_delta > T::zero()) || !self.ground_attach_delta.is_finite() {
            return bad("ground_attach_delta must be positive");
        }
        if self.min_stixel_height < 1 {
            return bad("min_stixel_height must be >= 1");
        }
        if self.stride < 1 {
            return bad("stride must be >= 1");
        }
        if !(self.top_band >= T::zero()) || !self.top_band.is_finite() {
            return bad("top_band must be non-negative");
        }
        Ok(())
    }
}

/// Ground object when the cluster's lowest point is within `delta` of the
/// plane, swib object otherwise.
pub fn classify_cluster<T: Real>(cluster: &[Point3<T>], plane: &Plane<T>, delta: T) -> StixelType {
    let lowest = cluster
        .iter()
        .map(|p| plane.signed_distance(p))
        .fold(T::infinity(), T::min);
    if lowest <= delta {
        StixelType::GroundObject
    } else {
        StixelType::SwibObject
    }
}

/// Fixed per-frame inputs of Stixel extraction.
#[derive(Debug, Clone, Copy)]
pub struct StixelContext<'a, T> {
    pub intrinsics: &'a CameraIntrinsics<T>,
    pub grid: GridSpec,
    pub plane: &'a Plane<T>,
    /// LiDAR origin in the camera frame; distances are measured from here.
    pub sensor_origin: Point3<T>,
    pub min_stixel_height: u32,
    pub top_band: T,
}

fn image_height<T: Real>(ctx: &StixelContext<'_, T>) -> T {
    T::from_u32(ctx.grid.image_height()).unwrap_or_else(T::zero)
}

fn row_floor<T: Real>(v: T, h: T) -> u32 {
    v.floor().max(T::zero()).min(h).to_u32().unwrap_or(0)
}

fn row_ceil<T: Real>(v: T, h: T) -> u32 {
    v.ceil().max(T::zero()).min(h).to_u32().unwrap_or(0)
}

/// Highest point of a cluster: among points within `top_band` of the maximum
/// height, the one projecting to the smallest image row.
pub fn top_point<T: Real>(ctx: &StixelContext<'_, T>, cluster: &[Point3<T>]) -> Option<(Point3<T>, T)> {
    let max_h = cluster
        .iter()
        .map(|p| ctx.plane.signed_distance(p))
        .fold(T::neg_infinity(), T::max);
    cluster
        .iter()
        .filter(|p| ctx.plane.signed_distance(p) >= max_h - ctx.top_band)
        .filter_map(|p| project_point(ctx.intrinsics, p).ok().map(|px| (*p, px.v)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
}

/// Lowest image row (as a real value) covered by the cluster.
fn bottom_row<T: Real>(ctx: &StixelContext<'_, T>, cluster: &[Point3<T>]) -> Option<T> {
    cluster
        .iter()
        .filter_map(|p| project_point(ctx.intrinsics, p).ok().map(|px| px.v))
        .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.max(v))))
}

/// Builds one Stixel from a cluster.
///
/// The top row comes from [`top_point`]. A ground object stands on the
/// plane: its bottom row is the projection of the nearest point dropped onto
/// the plane. A swib object's bottom is `preceding_top_row`, the line of
/// sight over whatever lies below it.
pub fn extract_stixel<T: Real>(
    ctx: &StixelContext<'_, T>,
    column: u32,
    cluster: &[Point3<T>],
    kind: StixelType,
    preceding_top_row: Option<u32>,
) -> Result<Stixel<T>, AgtError> {
    if cluster.is_empty() {
        return Err(AgtError::EmptyCluster);
    }
    let h = image_height(ctx);
    let (top, top_v) = top_point(ctx, cluster).ok_or(AgtError::EmptyCluster)?;
    let v_top = row_floor(top_v, h);
    let v_bottom = match kind {
        StixelType::SwibObject => preceding_top_row.ok_or(AgtError::MissingPrecedingRow)?,
        _ => {
            let nearest = cluster
                .iter()
                .min_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(std::cmp::Ordering::Equal))
                .expect("non-empty cluster");
            let foot = ctx.plane.project(nearest);
            match project_point(ctx.intrinsics, &foot) {
                Ok(px) => row_ceil(px.v, h),
                Err(_) => ctx.grid.image_height(),
            }
        }
    };
    let height = v_bottom as i64 - v_top as i64;
    if height < ctx.min_stixel_height as i64 {
        return Err(AgtError::DegenerateStixel {
            height,
            min: ctx.min_stixel_height,
        });
    }
    let distance = top.distance(&ctx.sensor_origin);
    Ok(Stixel::new(column, v_top, v_bottom, kind, Some(distance))?)
}

/// Image row where the plane's horizon crosses pixel column `u`.
pub fn horizon_row<T: Real>(intr: &CameraIntrinsics<T>, plane: &Plane<T>, u: T) -> Option<T> {
    let n = plane.normal();
    if n.y.abs() <= lit(1e-9) {
        return None;
    }
    let v = intr.cy - intr.fy * (n.z + n.x * (u - intr.cx) / intr.fx) / n.y;
    v.is_finite().then_some(v)
}

/// Interval `[top, bottom)` minus nearer intervals; the largest remaining piece.
fn clip_against(top: u32, bottom: u32, nearer: &[Stixel<impl Real>]) -> Option<(u32, u32)> {
    let mut pieces = vec![(top, bottom)];
    for s in nearer {
        let (a, b) = (s.v_top(), s.v_bottom());
        pieces = pieces
            .into_iter()
            .flat_map(|(t, bt)| {
                let mut out = Vec::with_capacity(2);
                if a >= bt || b <= t {
                    out.push((t, bt));
                } else {
                    if a > t {
                        out.push((t, a));
                    }
                    if b < bt {
                        out.push((b, bt));
                    }
                }
                out
            })
            .collect();
    }
    pieces.into_iter().max_by_key(|&(t, b)| (b - t, b))
}

/// Object Stixels of one column from its near-to-far clusters.
pub fn column_object_stixels<T: Real>(
    ctx: &StixelContext<'_, T>,
    column: u32,
    clusters: &[Vec<Point3<T>>],
    ground_attach_delta: T,
    sightline_tolerance: u32,
) -> Vec<Stixel<T>> {
    let h = image_height(ctx);
    let mut emitted: Vec<Stixel<T>> = Vec::new();
    for cluster in clusters {
        let Some(bottom_v) = bottom_row(ctx, cluster) else {
            continue;
        };
        let c_bot = row_ceil(bottom_v, h);
        let occluder = emitted
            .iter()
            .filter(|s| s.v_top().abs_diff(c_bot) <= sightline_tolerance)
            .min_by_key(|s| s.v_top().abs_diff(c_bot));
        let (kind, preceding) = match occluder {
            Some(o) => (StixelType::SwibObject, Some(o.v_top())),
            None => match classify_cluster(cluster, ctx.plane, ground_attach_delta) {
                StixelType::GroundObject => (StixelType::GroundObject, None),
                _ => (StixelType::SwibObject, Some(c_bot)),
            },
        };
        let Ok(stixel) = extract_stixel(ctx, column, cluster, kind, preceding) else {
            continue;
        };
        let Some((t, b)) = clip_against(stixel.v_top(), stixel.v_bottom(), &emitted) else {
            continue;
        };
        if b - t < ctx.min_stixel_height {
            continue;
        }
        let clipped = Stixel::new(column, t, b, kind, stixel.distance()).expect("clipped interval is valid");
        emitted.push(clipped);
    }
    emitted
}

/// Runs the full pipeline on one sensor-frame cloud.
pub fn generate_stixel_world<T: Real>(
    pc: &PointCloud<T>,
    calib: &Calibration<T>,
    cfg: &AgtConfig<T>,
) -> Result<StixelWorld<T>, AgtError> {
    cfg.validate()?;
    if pc.is_empty() {
        return Err(AgtError::EmptyCloud);
    }
    let intr = &calib.intrinsics;
    let grid = GridSpec::new(intr.width, intr.height, cfg.stride)?;
    let cam = transform_to_camera(pc, &calib.extrinsics)?;
    let ground = two_stage_ground(&cam, &cfg.ransac)?;
    let plane = ground.plane;

    let mut is_ground = vec![false; cam.len()];
    for &i in &ground.ground {
        is_ground[i] = true;
    }
    let (w, hgt) = (
        T::from_u32(intr.width).unwrap_or_else(T::zero),
        T::from_u32(intr.height).unwrap_or_else(T::zero),
    );
    let in_image = |p: &Point3<T>| {
        project_point(intr, p)
            .map(|px| px.u >= T::zero() && px.u < w && px.v >= T::zero() && px.v < hgt)
            .unwrap_or(false)
    };
    let candidates: Vec<usize> = (0..cam.len())
        .filter(|&i| !is_ground[i] && in_image(&cam.points()[i]))
        .collect();
    let visible: Vec<usize> = if candidates.is_empty() {
        Vec::new()
    } else {
        let pts: Vec<Point3<T>> = candidates.iter().map(|&i| cam.points()[i]).collect();
        match visible_from(&pts, &Point3::zero(), cfg.hpr_gamma) {
            Ok(vis) => vis.into_iter().map(|k| candidates[k]).collect(),
            Err(GeometryError::DegenerateHull) => candidates,
            Err(e) => return Err(e.into()),
        }
    };

    let ctx = StixelContext {
        intrinsics: intr,
        grid,
        plane: &plane,
        sensor_origin: calib.extrinsics.sensor_origin(),
        min_stixel_height: cfg.min_stixel_height,
        top_band: cfg.top_band,
    };
    let bins = bin_by_column(&cam, intr, &grid, &visible)?;
    let ground_bins = bin_by_column(&cam, intr, &grid, &ground.ground)?;

    let mut stixels = Vec::new();
    for (bin, gbin) in bins.iter().zip(&ground_bins) {
        let clusters: Vec<Vec<Point3<T>>> = cluster_column_objects(bin, &cam, &plane, &cfg.dbscan)
            .into_iter()
            .map(|c| c.into_iter().map(|i| cam.points()[i]).collect())
            .collect();
        let objects = column_object_stixels(
            &ctx,
            bin.column,
            &clusters,
            cfg.ground_attach_delta,
            cfg.sightline_tolerance,
        );
        if let Some(g) = ground_stixel(&ctx, bin.column, &gbin.indices, &cam, &objects) {
            stixels.push(g);
        }
        stixels.extend(objects);
    }
    Ok(StixelWorld::new(stixels, grid)?)
}

/// Lying ground Stixel of one column: from the lowest object bottom (or the
/// horizon) down to the bottom-most ground return.
fn ground_stixel<T: Real>(
    ctx: &StixelContext<'_, T>,
    column: u32,
    ground_indices: &[usize],
    cam: &PointCloud<T>,
    objects: &[Stixel<T>],
) -> Option<Stixel<T>> {
    let h = image_height(ctx);
    let lowest_ground = ground_indices
        .iter()
        .filter_map(|&i| project_point(ctx.intrinsics, &cam.points()[i]).ok())
        .map(|px| px.v)
        .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.max(v))))?;
    let v_bottom = row_ceil(lowest_ground, h);
    let u_center = T::from_u32(column * ctx.grid.stride() + ctx.grid.stride() / 2).unwrap_or_else(T::zero);
    let horizon = horizon_row(ctx.intrinsics, ctx.plane, u_center).map_or(0, |v| row_floor(v, h));
    let object_floor = objects.iter().map(Stixel::v_bottom).max().unwrap_or(0);
    let v_top = horizon.max(object_floor);
    if v_top >= v_bottom {
        return None;
    }
    let ray = pixel_ray(
        ctx.intrinsics,
        u_center,
        T::from_u32(v_top).unwrap_or_else(T::zero) + lit(0.5),
    );
    let denom = ctx.plane.normal().dot(&ray);
    let distance = if denom < T::zero() {
        let t = -ctx.plane.offset() / denom;
        Some(ray.scale(t).distance(&ctx.sensor_origin))
    } else {
        None
    };
    Stixel::new(column, v_top, v_bottom, StixelType::Ground, distance).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> Plane<f64> {
        // camera 1.6 m above flat ground, camera y down
        Plane::new(Point3::new(0.0, -1.0, 0.0), 1.6).unwrap()
    }

    fn intr() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(400.0, 400.0, 320.0, 160.0, 640, 320).unwrap()
    }

    fn ctx<'a>(intr: &'a CameraIntrinsics<f64>, plane: &'a Plane<f64>) -> StixelContext<'a, f64> {
        StixelContext {
            intrinsics: intr,
            grid: GridSpec::new(640, 320, 8).unwrap(),
            plane,
            sensor_origin: Point3::zero(),
            min_stixel_height: 4,
            top_band: 0.1,
        }
    }

    /// Points on a vertical face at depth `z`, heights `h0..h1` above ground.
    fn face(z: f64, h0: f64, h1: f64, n: usize) -> Vec<Point3<f64>> {
        (0..n)
            .map(|k| {
                let h = h0 + (h1 - h0) * k as f64 / (n - 1) as f64;
                Point3::new(0.0, 1.6 - h, z)
            })
            .collect()
    }

    #[test]
    fn classification() {
        let pl = plane();
        assert_eq!(
            classify_cluster(&face(10.0, 0.05, 1.0, 5), &pl, 0.3),
            StixelType::GroundObject
        );
        assert_eq!(
            classify_cluster(&face(10.0, 2.0, 3.0, 5), &pl, 0.3),
            StixelType::SwibObject
        );
    }

    #[test]
    fn ground_object_rows_match_projection() {
        let (k, pl) = (intr(), plane());
        let c = ctx(&k, &pl);
        // 1.8 m tall box face at 10 m
        let s = extract_stixel(&c, 40, &face(10.0, 0.1, 1.8, 20), StixelType::GroundObject, None).unwrap();
        // top: v = 160 + 400 * (1.6 - 1.8) / 10 = 152; foot: 160 + 400 * 1.6 / 10 = 224
        assert_eq!(s.v_top(), 152);
        assert_eq!(s.v_bottom(), 224);
        let top = Point3::new(0.0, 1.6 - 1.8, 10.0);
        assert!((s.distance().unwrap() - top.norm()).abs() < 1e-12);
    }

    #[test]
    fn swib_uses_preceding_row() {
        let (k, pl) = (intr(), plane());
        let c = ctx(&k, &pl);
        let s = extract_stixel(&c, 3, &face(20.0, 5.0, 6.0, 10), StixelType::SwibObject, Some(120)).unwrap();
        assert_eq!(s.v_bottom(), 120);
        assert_eq!(
            extract_stixel(&c, 3, &face(20.0, 5.0, 6.0, 10), StixelType::SwibObject, None),
            Err(AgtError::MissingPrecedingRow)
        );
    }

    #[test]
    fn tiny_far_cluster_is_degenerate() {
        let (k, pl) = (intr(), plane());
        let c = ctx(&k, &pl);
        // swib 2 px tall
        let pts = face(100.0, 4.0, 4.3, 3);
        let top_row = top_point(&c, &pts).unwrap().1.floor() as u32;
        let err = extract_stixel(&c, 0, &pts, StixelType::SwibObject, Some(top_row + 2)).unwrap_err();
        assert!(matches!(err, AgtError::DegenerateStixel { height: 2, min: 4 }));
    }

    #[test]
    fn top_band_prefers_highest_projection() {
        let (k, pl) = (intr(), plane());
        let c = ctx(&k, &pl);
        // flat top at 1.0 m seen from 1.6 m: the far edge projects higher
        let pts = vec![
            Point3::new(0.0, 0.6, 10.0),
            Point3::new(0.0, 0.6, 12.0),
            Point3::new(0.0, 1.0, 10.0),
        ];
        let (p, _) = top_point(&c, &pts).unwrap();
        assert_eq!(p.z, 12.0);
    }

    #[test]
    fn wall_behind_box_becomes_swib_on_box_top() {
        let (k, pl) = (intr(), plane());
        let c = ctx(&k, &pl);
        let bx = face(10.0, 0.1, 2.4, 30);
        // wall at 30 m visible just above the box's sight line
        let sight_h = 1.6 + (2.4 - 1.6) * 3.0;
        let wall = face(30.0, sight_h + 0.05, 6.0, 40);
        let out = column_object_stixels(&c, 5, &[bx, wall], 0.3, 16);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].kind(), StixelType::GroundObject);
        assert_eq!(out[1].kind(), StixelType::SwibObject);
        assert_eq!(out[1].v_bottom(), out[0].v_top());
    }

    #[test]
    fn column_output_never_overlaps() {
        let (k, pl) = (intr(), plane());
        let c = ctx(&k, &pl);
        // a far ground-standing wall whose footprint falls behind a near box
        let bx = face(8.0, 0.1, 1.5, 20);
        let wall = face(25.0, 0.1, 8.0, 60);
        let out = column_object_stixels(&c, 0, &[bx, wall], 0.3, 2);
        for (i, a) in out.iter().enumerate() {
            for b in &out[i + 1..] {
                assert!(a.v_bottom() <= b.v_top() || b.v_bottom() <= a.v_top());
            }
        }
    }

    #[test]
    fn horizon_of_level_camera_is_principal_row() {
        let v = horizon_row(&intr(), &plane(), 100.0).unwrap();
        assert!((v - 160.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut c = AgtConfig::<f64>::default();
        assert!(c.validate().is_ok());
        c.min_stixel_height = 0;
        assert!(c.validate().is_err());
        c = AgtConfig {
            ground_attach_delta: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = AgtConfig {
            hpr_gamma: -1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
