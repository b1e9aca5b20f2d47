//! Synthetic scenes: ray-cast LiDAR clouds and exact oracle Stixel-Worlds.
//!
//! Scenes live in a world frame with x forward, y left and z up; the ground
//! is the plane `z = ground_z`. The LiDAR frame is the world frame shifted to
//! the LiDAR position. The camera is level and looks along +x.
//!
//! Scene files are TOML:
//!
//! ```toml
//! seed = 7
//! ground_z = 0.0
//!
//! [lidar]
//! position = [0.0, 0.0, 1.7]
//! vertical_fov_deg = 45.0
//! channels = 128
//! azimuth_step_deg = 0.35
//!
//! [camera]
//! position = [0.0, 0.0, 1.7]
//! width = 640
//! height = 320
//! focal = 400.0
//!
//! [[boxes]]
//! center = [12.0, 1.0, 1.2]
//! size = [2.0, 3.0, 2.4]
//!
//! [[walls]]
//! corner = [35.0, 12.0, 0.0]
//! edge_u = [0.0, -24.0, 0.0]
//! edge_v = [0.0, 0.0, 5.0]
//! ```
//!
//! Omitted LiDAR and camera keys take the defaults of [`LidarSpec`] and
//! [`CameraSpec`].

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agt::AgtConfig;
use crate::scalar::{lit, to_f64, Real};
use crate::types::{
    Calibration, CameraIntrinsics, Extrinsics, Frame, GridSpec, InvariantError, Point3, PointCloud, Stixel, StixelType,
    StixelWorld,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("scene parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
}

/// Axis-aligned box: center and full side lengths (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec<T> {
    pub center: [T; 3],
    pub size: [T; 3],
}

/// Planar rectangle `corner + a * edge_u + b * edge_v`, `a, b in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallSpec<T> {
    pub corner: [T; 3],
    pub edge_u: [T; 3],
    pub edge_v: [T; 3],
}

/// Spinning LiDAR with evenly spaced channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct LidarSpec<T> {
    pub position: [T; 3],
    pub vertical_fov_deg: T,
    pub channels: usize,
    pub azimuth_step_deg: T,
    /// Azimuth window, positive to the left of forward.
    pub azimuth_min_deg: T,
    pub azimuth_max_deg: T,
    pub max_range: T,
    /// Standard deviation of Gaussian range noise (meters); 0 disables it.
    pub range_noise: T,
}

impl<T: Real> Default for LidarSpec<T> {
    fn default() -> Self {
        Self {
            position: [T::zero(), T::zero(), lit(1.7)],
            vertical_fov_deg: lit(45.0),
            channels: 128,
            azimuth_step_deg: lit(0.35),
            azimuth_min_deg: lit(-40.0),
            azimuth_max_deg: lit(40.0),
            max_range: lit(120.0),
            range_noise: T::zero(),
        }
    }
}

/// Level pinhole camera looking along +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct CameraSpec<T> {
    pub position: [T; 3],
    pub width: u32,
    pub height: u32,
    pub focal: T,
    pub cx: T,
    pub cy: T,
}

impl<T: Real> Default for CameraSpec<T> {
    fn default() -> Self {
        Self {
            position: [T::zero(), T::zero(), lit(1.7)],
            width: 640,
            height: 320,
            focal: lit(400.0),
            cx: lit(320.0),
            cy: lit(160.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct SceneSpec<T> {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ground_z: T,
    #[serde(default)]
    pub boxes: Vec<BoxSpec<T>>,
    #[serde(default)]
    pub walls: Vec<WallSpec<T>>,
    #[serde(default)]
    pub lidar: LidarSpec<T>,
    #[serde(default)]
    pub camera: CameraSpec<T>,
}

impl<T: Real> Default for SceneSpec<T> {
    fn default() -> Self {
        Self {
            seed: 0,
            ground_z: T::zero(),
            boxes: Vec::new(),
            walls: Vec::new(),
            lidar: LidarSpec::default(),
            camera: CameraSpec::default(),
        }
    }
}

/// What a ray hit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Surface {
    Ground,
    Box(usize),
    Wall(usize),
}

fn p3<T: Real>(a: [T; 3]) -> Point3<T> {
    Point3::from_array(a)
}

fn positive_finite<T: Real>(v: T) -> bool {
    v.is_finite() && v > T::zero()
}

impl<T: Real + DeserializeOwned> SceneSpec<T> {
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let spec: Self = toml::from_str(text).map_err(|e| SynthError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

impl<T: Real + Serialize> SceneSpec<T> {
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scene specs serialize to TOML")
    }
}

impl<T: Real> SceneSpec<T> {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidScene(m));
        let l = &self.lidar;
        if !(positive_finite(l.vertical_fov_deg) && l.vertical_fov_deg < lit(180.0)) {
            return bad(format!("vertical FoV {} must be in (0, 180)", l.vertical_fov_deg));
        }
        if l.channels < 1 {
            return bad("at least one channel required".into());
        }
        if !positive_finite(l.azimuth_step_deg) {
            return bad("azimuth step must be positive".into());
        }
        if !(l.azimuth_min_deg.is_finite() && l.azimuth_max_deg.is_finite() && l.azimuth_min_deg <= l.azimuth_max_deg) {
            return bad("azimuth window must be finite and ordered".into());
        }
        if !positive_finite(l.max_range) {
            return bad("max range must be positive".into());
        }
        if !(l.range_noise.is_finite() && l.range_noise >= T::zero()) {
            return bad("range noise must be >= 0".into());
        }
        if !self.ground_z.is_finite() || !p3(l.position).is_finite() || !p3(self.camera.position).is_finite() {
            return bad("non-finite position".into());
        }
        if !positive_finite(self.camera.focal) {
            return bad("focal length must be positive".into());
        }
        let front = l.position[0].max(self.camera.position[0]);
        for (i, b) in self.boxes.iter().enumerate() {
            if !p3(b.center).is_finite() || b.size.iter().any(|&s| !positive_finite(s)) {
                return bad(format!("box {i} needs finite center and positive size"));
            }
            if b.center[0] - b.size[0] / lit(2.0) <= front {
                return bad(format!("box {i} is not in front of the sensors"));
            }
        }
        for (i, w) in self.walls.iter().enumerate() {
            let (c, eu, ev) = (p3(w.corner), p3(w.edge_u), p3(w.edge_v));
            if !(c.is_finite() && eu.is_finite() && ev.is_finite()) || eu.cross(&ev).norm() <= lit(1e-9) {
                return bad(format!("wall {i} needs two finite non-parallel edges"));
            }
            for q in [c, c + eu, c + ev, c + eu + ev] {
                if q.x <= front {
                    return bad(format!("wall {i} is not in front of the sensors"));
                }
            }
        }
        Ok(())
    }

    /// Camera intrinsics and the LiDAR-to-camera transform.
    pub fn calibration(&self) -> Result<Calibration<T>, SynthError> {
        let c = &self.camera;
        let intrinsics = CameraIntrinsics::new(c.focal, c.focal, c.cx, c.cy, c.width, c.height)?;
        let (o, z) = (T::one(), T::zero());
        let r = [[z, -o, z], [z, z, -o], [o, z, z]];
        let d = p3(self.lidar.position) - p3(c.position);
        let t = Point3::new(-d.y, -d.z, d.x);
        Ok(Calibration {
            intrinsics,
            extrinsics: Extrinsics::new(r, t)?,
        })
    }

    /// Nearest surface along `origin + t * dir`, `t > 0`.
    pub fn cast(&self, origin: Point3<T>, dir: Point3<T>) -> Option<(T, Surface)> {
        let eps: T = lit(1e-9);
        let mut best: Option<(T, Surface)> = None;
        let mut offer = |t: T, s: Surface| {
            if t > eps && best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, s));
            }
        };
        if dir.z < -eps || dir.z > eps {
            offer((self.ground_z - origin.z) / dir.z, Surface::Ground);
        }
        for (i, b) in self.boxes.iter().enumerate() {
            if let Some(t) = ray_box(origin, dir, b) {
                offer(t, Surface::Box(i));
            }
        }
        for (i, w) in self.walls.iter().enumerate() {
            if let Some(t) = ray_wall(origin, dir, w) {
                offer(t, Surface::Wall(i));
            }
        }
        best
    }

    /// Lowest height of a surface above the ground.
    fn clearance(&self, s: Surface) -> T {
        match s {
            Surface::Ground => T::zero(),
            Surface::Box(i) => {
                let b = &self.boxes[i];
                b.center[2] - b.size[2] / lit(2.0) - self.ground_z
            }
            Surface::Wall(i) => {
                let w = &self.walls[i];
                let (c, eu, ev) = (p3(w.corner), p3(w.edge_u), p3(w.edge_v));
                [c, c + eu, c + ev, c + eu + ev]
                    .iter()
                    .map(|q| q.z)
                    .fold(T::infinity(), T::min)
                    - self.ground_z
            }
        }
    }
}

fn ray_box<T: Real>(o: Point3<T>, d: Point3<T>, b: &BoxSpec<T>) -> Option<T> {
    let half: T = lit(0.5);
    let (o, d) = (o.to_array(), d.to_array());
    let mut t0 = T::neg_infinity();
    let mut t1 = T::infinity();
    for a in 0..3 {
        let lo = b.center[a] - b.size[a] * half;
        let hi = b.center[a] + b.size[a] * half;
        if d[a] == T::zero() {
            if o[a] < lo || o[a] > hi {
                return None;
            }
            continue;
        }
        let (mut ta, mut tb) = ((lo - o[a]) / d[a], (hi - o[a]) / d[a]);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
    }
    if t0 > t1 || t1 <= T::zero() {
        return None;
    }
    Some(if t0 > T::zero() { t0 } else { t1 })
}

fn ray_wall<T: Real>(o: Point3<T>, d: Point3<T>, w: &WallSpec<T>) -> Option<T> {
    let (c, eu, ev) = (p3(w.corner), p3(w.edge_u), p3(w.edge_v));
    let n = eu.cross(&ev);
    let denom = n.dot(&d);
    if denom.abs() <= lit(1e-12) {
        return None;
    }
    let t = n.dot(&(c - o)) / denom;
    let q = o + d * t - c;
    // Coordinates of q in the (possibly skew) edge basis.
    let (uu, uv, vv) = (eu.dot(&eu), eu.dot(&ev), ev.dot(&ev));
    let (qu, qv) = (q.dot(&eu), q.dot(&ev));
    let det = uu * vv - uv * uv;
    let a = (qu * vv - qv * uv) / det;
    let b = (qv * uu - qu * uv) / det;
    let inside = |x: T| x >= T::zero() && x <= T::one();
    (inside(a) && inside(b)).then_some(t)
}

/// LiDAR returns together with the surface each one came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScan<T> {
    pub cloud: PointCloud<T>,
    pub labels: Vec<Surface>,
}

fn deg<T: Real>(v: T) -> T {
    v.to_radians()
}

/// Ray directions of the scan pattern, channel-major, in the LiDAR frame.
fn scan_directions<T: Real>(l: &LidarSpec<T>) -> Vec<Point3<T>> {
    let half = l.vertical_fov_deg / lit(2.0);
    let elevations: Vec<T> = if l.channels == 1 {
        vec![T::zero()]
    } else {
        let step = l.vertical_fov_deg / T::from_usize(l.channels - 1).unwrap_or_else(T::one);
        (0..l.channels)
            .map(|k| -half + step * T::from_usize(k).unwrap_or_else(T::zero))
            .collect()
    };
    let span = to_f64(l.azimuth_max_deg - l.azimuth_min_deg);
    let n_az = (span / to_f64(l.azimuth_step_deg) + 1e-9).floor() as usize + 1;
    let mut dirs = Vec::with_capacity(elevations.len() * n_az);
    for &el in &elevations {
        let (se, ce) = deg(el).sin_cos();
        for k in 0..n_az {
            let az = l.azimuth_min_deg + l.azimuth_step_deg * T::from_usize(k).unwrap_or_else(T::zero);
            let (sa, ca) = deg(az).sin_cos();
            dirs.push(Point3::new(ce * ca, ce * sa, se));
        }
    }
    dirs
}

/// Casts the scan pattern and keeps the first hit of every ray within range.
pub fn simulate_lidar_labeled<T: Real>(spec: &SceneSpec<T>) -> Result<LabeledScan<T>, SynthError> {
    spec.validate()?;
    let l = &spec.lidar;
    let origin = p3(l.position);
    let noise = if l.range_noise > T::zero() {
        Some(Normal::new(0.0, to_f64(l.range_noise)).map_err(|e| SynthError::InvalidScene(e.to_string()))?)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for dir in scan_directions(l) {
        let Some((t, surface)) = spec.cast(origin, dir) else {
            continue;
        };
        if t > l.max_range {
            continue;
        }
        let range = match &noise {
            Some(n) => (t + lit(n.sample(&mut rng))).max(lit(1e-3)),
            None => t,
        };
        points.push(dir * range);
        labels.push(surface);
    }
    Ok(LabeledScan {
        cloud: PointCloud::new(points, Frame::Sensor)?,
        labels,
    })
}

/// LiDAR cloud in the sensor frame.
pub fn simulate_lidar<T: Real>(spec: &SceneSpec<T>) -> Result<PointCloud<T>, SynthError> {
    Ok(simulate_lidar_labeled(spec)?.cloud)
}

/// True when the segment from the camera to `world_point` hits nothing else
/// first.
pub fn visible_from_camera<T: Real>(spec: &SceneSpec<T>, world_point: Point3<T>) -> bool {
    let c = p3(spec.camera.position);
    let d = world_point - c;
    let dist = d.norm();
    match spec.cast(c, d.scale(T::one() / dist)) {
        Some((t, _)) => t >= dist - lit(1e-6),
        None => true,
    }
}

/// Parameters of the oracle that mirror the pipeline's own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig<T> {
    pub ground_attach_delta: T,
    pub min_stixel_height: u32,
    /// Rays cast per grid column and pixel row.
    pub subcolumns: u32,
}

impl<T: Real> Default for OracleConfig<T> {
    fn default() -> Self {
        Self::from_agt(&AgtConfig::default())
    }
}

impl<T: Real> OracleConfig<T> {
    pub fn from_agt(cfg: &AgtConfig<T>) -> Self {
        Self {
            ground_attach_delta: cfg.ground_attach_delta,
            min_stixel_height: cfg.min_stixel_height,
            subcolumns: 32,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Run<T> {
    top: u32,
    bottom: u32,
    /// Surface hit on the row just below the run, with its range.
    below: Option<(Surface, T)>,
    /// Camera range at the run's last row.
    bottom_range: T,
    /// LiDAR distance of the run's top hit.
    top_distance: T,
    nearest: T,
}

#[derive(Clone, Copy)]
struct Hit<T> {
    surface: Surface,
    range: T,
    point: Point3<T>,
}

/// Exact Stixel-World seen by the camera, built by dense ray casting.
///
/// Each column is sampled by `subcolumns` rays per pixel row. Every surface
/// visible in the column becomes one Stixel per vertically connected piece:
/// a swib object resting on the line of sight over a nearer object when one
/// lies directly below it, otherwise a ground object if it touches the ground
/// (within `ground_attach_delta`) or a swib object ending at its own lowest
/// row. Nearer Stixels clip farther ones. The lying ground Stixel runs from
/// the horizon (or the lowest object bottom) to the lowest visible ground
/// row. Hits beyond the LiDAR range count as empty space.
pub fn oracle_stixel_world<T: Real>(
    spec: &SceneSpec<T>,
    grid: &GridSpec,
    cfg: &OracleConfig<T>,
) -> Result<StixelWorld<T>, SynthError> {
    spec.validate()?;
    let cam = &spec.camera;
    if grid.image_width() != cam.width || grid.image_height() != cam.height {
        return Err(SynthError::InvalidScene(format!(
            "grid {}x{} does not match camera {}x{}",
            grid.image_width(),
            grid.image_height(),
            cam.width,
            cam.height
        )));
    }
    let k = cfg.subcolumns.max(1);
    let origin = p3(cam.position);
    let lidar = p3(spec.lidar.position);
    let h = cam.height;
    let s = grid.stride();
    let half: T = lit(0.5);
    let ray = |u: T, v: T| Point3::new(T::one(), -(u - cam.cx) / cam.focal, -(v - cam.cy) / cam.focal);
    let hit_at = |u: T, v: T| -> Option<Hit<T>> {
        let d = ray(u, v);
        let (t, surface) = spec.cast(origin, d)?;
        let point = origin + d * t;
        if point.distance(&lidar) > spec.lidar.max_range {
            return None;
        }
        Some(Hit {
            surface,
            range: point.distance(&origin),
            point,
        })
    };
    // A level camera sees the ground's vanishing line at the principal row.
    let horizon = cam.cy.floor().max(T::zero()).to_u32().unwrap_or(0).min(h);

    let mut stixels = Vec::new();
    for col in 0..grid.cols() as u32 {
        let mut runs: HashMap<Surface, Vec<Run<T>>> = HashMap::new();
        let mut ground_bottom: Option<u32> = None;
        for sub in 0..k {
            let u = T::from_u32(col * s).unwrap_or_else(T::zero)
                + T::from_u32(s).unwrap_or_else(T::one) * (T::from_u32(sub).unwrap_or_else(T::zero) + half)
                    / T::from_u32(k).unwrap_or_else(T::one);
            let hits: Vec<Option<Hit<T>>> = (0..h)
                .map(|v| hit_at(u, T::from_u32(v).unwrap_or_else(T::zero) + half))
                .collect();
            let mut v = 0usize;
            while v < hits.len() {
                let Some(first) = hits[v] else {
                    v += 1;
                    continue;
                };
                let start = v;
                let mut nearest = first.range;
                while v < hits.len() && hits[v].is_some_and(|x| x.surface == first.surface) {
                    nearest = nearest.min(hits[v].map_or(nearest, |x| x.range));
                    v += 1;
                }
                if first.surface == Surface::Ground {
                    ground_bottom = Some(ground_bottom.map_or(v as u32, |g| g.max(v as u32)));
                    continue;
                }
                let last = hits[v - 1].expect("run row has a hit");
                runs.entry(first.surface).or_default().push(Run {
                    top: start as u32,
                    bottom: v as u32,
                    below: hits.get(v).copied().flatten().map(|x| (x.surface, x.range)),
                    bottom_range: last.range,
                    top_distance: first.point.distance(&lidar),
                    nearest,
                });
            }
        }

        let mut segments: Vec<(Surface, Run<T>)> = Vec::new();
        for (surface, mut rs) in runs {
            rs.sort_by_key(|r| (r.top, r.bottom));
            let mut merged: Vec<Run<T>> = Vec::new();
            for r in rs {
                match merged.last_mut() {
                    Some(m) if r.top <= m.bottom + 1 => {
                        if r.top < m.top {
                            m.top = r.top;
                            m.top_distance = r.top_distance;
                        }
                        if r.bottom > m.bottom {
                            m.bottom = r.bottom;
                            m.below = r.below;
                            m.bottom_range = r.bottom_range;
                        }
                        m.nearest = m.nearest.min(r.nearest);
                    }
                    _ => merged.push(r),
                }
            }
            segments.extend(merged.into_iter().map(|m| (surface, m)));
        }
        segments.sort_by(|a, b| {
            a.1.nearest
                .partial_cmp(&b.1.nearest)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });

        let mut emitted: Vec<Stixel<T>> = Vec::new();
        for (surface, seg) in segments {
            let occluded_below = seg
                .below
                .is_some_and(|(bs, br)| bs != Surface::Ground && br < seg.bottom_range);
            let kind = if !occluded_below && spec.clearance(surface) <= cfg.ground_attach_delta {
                StixelType::GroundObject
            } else {
                StixelType::SwibObject
            };
            let Some((t, b)) = clip_largest(seg.top, seg.bottom, &emitted) else {
                continue;
            };
            if b - t < cfg.min_stixel_height {
                continue;
            }
            emitted.push(Stixel::new(col, t, b, kind, Some(seg.top_distance))?);
        }

        if let Some(gb) = ground_bottom {
            let top = emitted.iter().map(Stixel::v_bottom).max().unwrap_or(0).max(horizon);
            if top < gb {
                let uc = T::from_u32(col * s + s / 2).unwrap_or_else(T::zero);
                let d = ray(uc, T::from_u32(top).unwrap_or_else(T::zero) + half);
                let distance = (d.z < T::zero()).then(|| {
                    let t = (spec.ground_z - origin.z) / d.z;
                    (origin + d * t).distance(&lidar)
                });
                stixels.push(Stixel::new(col, top, gb, StixelType::Ground, distance)?);
            }
        }
        stixels.extend(emitted);
    }
    Ok(StixelWorld::new(stixels, *grid)?)
}

/// `[top, bottom)` minus the emitted intervals; the largest remaining piece.
fn clip_largest<T: Real>(top: u32, bottom: u32, emitted: &[Stixel<T>]) -> Option<(u32, u32)> {
    let mut pieces = vec![(top, bottom)];
    for s in emitted {
        let (a, b) = s.pixel_interval();
        let mut next = Vec::with_capacity(pieces.len() + 1);
        for (t, bt) in pieces {
            if a >= bt || b <= t {
                next.push((t, bt));
                continue;
            }
            if a > t {
                next.push((t, a));
            }
            if b < bt {
                next.push((b, bt));
            }
        }
        pieces = next;
    }
    pieces.into_iter().max_by_key(|&(t, b)| (b - t, b))
}

/// A street-like scene: 2 to 5 grounded boxes, a wall across the far end and
/// an elevated slab, all placed from `seed`.
pub fn random_street_scene<T: Real>(seed: u64) -> SceneSpec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_boxes = rng.random_range(2..=5);
    let mut placed: Vec<[f64; 4]> = Vec::new();
    let mut boxes = Vec::new();
    let mut attempts = 0;
    while boxes.len() < n_boxes && attempts < 1000 {
        attempts += 1;
        let x = rng.random_range(8.0..24.0);
        let y = rng.random_range(-0.45..0.45) * x;
        let (sx, sy, sz) = (
            rng.random_range(1.5..3.5),
            rng.random_range(1.5..3.0),
            rng.random_range(1.6..2.6),
        );
        let clear = placed
            .iter()
            .all(|p| (p[0] - x).abs() > (p[2] + sx) / 2.0 + 1.0 || (p[1] - y).abs() > (p[3] + sy) / 2.0 + 1.0);
        if !clear {
            continue;
        }
        placed.push([x, y, sx, sy]);
        boxes.push(BoxSpec {
            center: [lit(x), lit(y), lit(sz / 2.0)],
            size: [lit(sx), lit(sy), lit(sz)],
        });
    }
    let slab_x = rng.random_range(12.0..18.0);
    let slab_y = rng.random_range(-6.0..6.0);
    let slab_z = rng.random_range(4.2..5.0);
    boxes.push(BoxSpec {
        center: [lit(slab_x), lit(slab_y), lit(slab_z)],
        size: [lit(2.0), lit(rng.random_range(6.0..10.0)), lit(0.4)],
    });
    let wall_x = rng.random_range(32.0..38.0);
    let half_width = rng.random_range(8.0..14.0);
    let wall_y = rng.random_range(-6.0..6.0);
    SceneSpec {
        seed,
        boxes,
        walls: vec![WallSpec {
            corner: [lit(wall_x), lit(wall_y + half_width), T::zero()],
            edge_u: [T::zero(), lit(-2.0 * half_width), T::zero()],
            edge_v: [T::zero(), T::zero(), lit(rng.random_range(4.0..5.0))],
        }],
        ..SceneSpec::default()
    }
}
