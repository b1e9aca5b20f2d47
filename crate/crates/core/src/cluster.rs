//! DBSCAN and the column/elevation decomposition of non-ground points.

use std::collections::HashMap;

use thiserror::Error;

use crate::geometry::project_point;
use crate::scalar::{lit, Real};
use crate::types::{CameraIntrinsics, GridSpec, Plane, Point3, PointCloud};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("invalid DBSCAN configuration: {0}")]
    InvalidConfig(String),
    #[error("grid {grid_w}x{grid_h} does not match camera image {cam_w}x{cam_h}")]
    GridMismatch {
        grid_w: u32,
        grid_h: u32,
        cam_w: u32,
        cam_h: u32,
    },
    #[error("candidate index {0} out of range")]
    IndexOutOfRange(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanConfig<T> {
    /// Neighborhood radius (meters).
    pub eps: T,
    /// Neighbors (including the point itself) required for a core point.
    pub min_pts: usize,
}

impl<T: Real> Default for DbscanConfig<T> {
    fn default() -> Self {
        Self {
            eps: lit(0.4),
            min_pts: 3,
        }
    }
}

impl<T: Real> DbscanConfig<T> {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if !(self.eps > T::zero()) || !self.eps.is_finite() {
            return Err(ClusterError::InvalidConfig("eps must be positive".into()));
        }
        if self.min_pts == 0 {
            return Err(ClusterError::InvalidConfig("min_pts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Cluster id per point; `None` marks noise.
pub type Labels = Vec<Option<usize>>;

struct CellIndex {
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl CellIndex {
    fn key<T: Real>(p: &Point3<T>, eps: T) -> (i64, i64, i64) {
        let k = |v: T| (v / eps).floor().to_i64().unwrap_or(0);
        (k(p.x), k(p.y), k(p.z))
    }

    fn build<T: Real>(points: &[Point3<T>], eps: T) -> Self {
        let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, eps)).or_default().push(i);
        }
        Self { cells }
    }

    fn neighbors<T: Real>(&self, points: &[Point3<T>], i: usize, eps: T, out: &mut Vec<usize>) {
        out.clear();
        let (kx, ky, kz) = Self::key(&points[i], eps);
        let eps2 = eps * eps;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = self.cells.get(&(kx + dx, ky + dy, kz + dz)) {
                        out.extend(
                            bucket
                                .iter()
                                .copied()
                                .filter(|&j| (points[j] - points[i]).norm_squared() <= eps2),
                        );
                    }
                }
            }
        }
    }
}

/// Density-based clustering with Euclidean distance.
///
/// Clusters are numbered in order of their first core point. A border point
/// reachable from several clusters joins the first one that reaches it.
pub fn dbscan<T: Real>(points: &[Point3<T>], cfg: &DbscanConfig<T>) -> Labels {
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Unvisited,
        Noise,
        Cluster(usize),
    }
    let index = CellIndex::build(points, cfg.eps);
    let mut state = vec![State::Unvisited; points.len()];
    let mut next = 0;
    let mut nb = Vec::new();
    let mut queue = Vec::new();
    for i in 0..points.len() {
        if state[i] != State::Unvisited {
            continue;
        }
        index.neighbors(points, i, cfg.eps, &mut nb);
        if nb.len() < cfg.min_pts {
            state[i] = State::Noise;
            continue;
        }
        let c = next;
        next += 1;
        state[i] = State::Cluster(c);
        queue.clear();
        queue.extend_from_slice(&nb);
        while let Some(j) = queue.pop() {
            match state[j] {
                State::Noise => {
                    state[j] = State::Cluster(c);
                    continue;
                }
                State::Cluster(_) => continue,
                State::Unvisited => {}
            }
            state[j] = State::Cluster(c);
            index.neighbors(points, j, cfg.eps, &mut nb);
            if nb.len() >= cfg.min_pts {
                queue.extend_from_slice(&nb);
            }
        }
    }
    state
        .into_iter()
        .map(|s| match s {
            State::Cluster(c) => Some(c),
            _ => None,
        })
        .collect()
}

/// Points falling into one grid column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnBin {
    pub column: u32,
    pub indices: Vec<usize>,
}

/// Assigns candidate points to grid columns by `floor(u / stride)`.
///
/// Points behind the camera or projecting outside the image are dropped.
/// One bin is returned per grid column, in column order.
pub fn bin_by_column<T: Real>(
    pc: &PointCloud<T>,
    intr: &CameraIntrinsics<T>,
    grid: &GridSpec,
    candidates: &[usize],
) -> Result<Vec<ColumnBin>, ClusterError> {
    if grid.image_width() != intr.width || grid.image_height() != intr.height {
        return Err(ClusterError::GridMismatch {
            grid_w: grid.image_width(),
            grid_h: grid.image_height(),
            cam_w: intr.width,
            cam_h: intr.height,
        });
    }
    let mut bins: Vec<ColumnBin> = (0..grid.cols() as u32)
        .map(|column| ColumnBin {
            column,
            indices: Vec::new(),
        })
        .collect();
    let w = T::from_u32(grid.image_width()).unwrap_or_else(T::zero);
    let h = T::from_u32(grid.image_height()).unwrap_or_else(T::zero);
    let s = T::from_u32(grid.stride()).unwrap_or_else(T::one);
    for &i in candidates {
        let p = pc.points().get(i).ok_or(ClusterError::IndexOutOfRange(i))?;
        let Ok(px) = project_point(intr, p) else {
            continue;
        };
        if !(px.u >= T::zero() && px.u < w && px.v >= T::zero() && px.v < h) {
            continue;
        }
        let col = (px.u / s).floor().to_usize().unwrap_or(0).min(bins.len() - 1);
        bins[col].indices.push(i);
    }
    Ok(bins)
}

/// Splits one column into objects by clustering (range, height-above-plane).
///
/// Noise is discarded. Clusters (as cloud indices) come back ordered by mean
/// distance from the camera origin.
pub fn cluster_column_objects<T: Real>(
    bin: &ColumnBin,
    pc: &PointCloud<T>,
    plane: &Plane<T>,
    cfg: &DbscanConfig<T>,
) -> Vec<Vec<usize>> {
    if bin.indices.is_empty() {
        return Vec::new();
    }
    let features: Vec<Point3<T>> = bin
        .indices
        .iter()
        .map(|&i| {
            let p = pc.points()[i];
            Point3::new(p.norm(), plane.signed_distance(&p), T::zero())
        })
        .collect();
    let labels = dbscan(&features, cfg);
    let n_clusters = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    for (k, label) in labels.iter().enumerate() {
        if let Some(c) = label {
            clusters[*c].push(bin.indices[k]);
        }
    }
    let mean_range = |c: &Vec<usize>| {
        let sum: T = c.iter().map(|&i| pc.points()[i].norm()).sum();
        sum / T::from_usize(c.len()).unwrap_or_else(T::one)
    };
    let mut keyed: Vec<(T, Vec<usize>)> = clusters.into_iter().map(|c| (mean_range(&c), c)).collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    keyed.into_iter().map(|(_, c)| c).collect()
}
