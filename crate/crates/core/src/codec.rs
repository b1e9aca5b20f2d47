//! Stixel-World to occupancy/cut target grids and back.

use thiserror::Error;

use crate::scalar::{lit, Real};
use crate::types::{Grid, GridSpec, HeatmapPair, InvariantError, Stixel, StixelType, StixelWorld, TargetGrid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("world grid {world:?} does not match target grid {grid:?}")]
    GridMismatch { world: GridSpec, grid: GridSpec },
    #[error("non-finite value in raw heat map")]
    NonFiniteInput,
    #[error("invalid decode configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
}

/// Thresholds for turning heat maps back into Stixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    /// Occupancy threshold `t`.
    pub t_occ: f64,
    pub t_cut: f64,
    /// Occupied runs shorter than this many cells are dropped.
    pub min_run_cells: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            t_occ: 0.5,
            t_cut: 0.5,
            min_run_cells: 1,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<(), CodecError> {
        for (name, t) in [("t_occ", self.t_occ), ("t_cut", self.t_cut)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(CodecError::InvalidConfig(format!("{name} = {t} outside [0, 1]")));
            }
        }
        if self.min_run_cells < 1 {
            return Err(CodecError::InvalidConfig("min_run_cells must be >= 1".into()));
        }
        Ok(())
    }
}

/// Cell rows `[floor(v_top / s), ceil(v_bottom / s))` covered by a Stixel.
pub fn cell_span<T: Real>(s: &Stixel<T>, stride: u32) -> (usize, usize) {
    let top = s.v_top() / stride;
    let bottom = s.v_bottom().div_ceil(stride);
    (top as usize, bottom as usize)
}

/// Rasterizes the object Stixels of `world` into binary targets.
pub fn encode_targets<T: Real>(world: &StixelWorld<T>, grid: &GridSpec) -> Result<TargetGrid, CodecError> {
    if world.grid() != *grid {
        return Err(CodecError::GridMismatch {
            world: world.grid(),
            grid: *grid,
        });
    }
    let (m, n) = (grid.rows(), grid.cols());
    let mut occ = Grid::filled(m, n, 0u8);
    let mut cut = Grid::filled(m, n, 0u8);
    for s in world.objects() {
        let c = s.column() as usize;
        let (top, bottom) = cell_span(s, grid.stride());
        for r in top..bottom {
            occ.set(r, c, 1);
        }
        cut.set(top, c, 1);
        cut.set(bottom - 1, c, 1);
    }
    Ok(TargetGrid::new(occ, cut, *grid)?)
}

fn min_max_normalize<T: Real>(raw: &Grid<T>) -> Result<Grid<T>, CodecError> {
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for &v in raw.as_slice() {
        if !v.is_finite() {
            return Err(CodecError::NonFiniteInput);
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if raw.is_empty() || !(hi > lo) {
        return Ok(raw.map(|_| T::zero()));
    }
    let range = hi - lo;
    Ok(raw.map(|v| ((v - lo) / range).max(T::zero()).min(T::one())))
}

/// Min-max normalizes each map independently; a constant map becomes zeros.
pub fn normalize_heatmaps<T: Real>(
    raw_occ: &Grid<T>,
    raw_cut: &Grid<T>,
    grid: &GridSpec,
) -> Result<HeatmapPair<T>, CodecError> {
    let occ = min_max_normalize(raw_occ)?;
    let cut = min_max_normalize(raw_cut)?;
    Ok(HeatmapPair::new(occ, cut, *grid)?)
}

/// Split positions inside the run `[start, end)`.
///
/// Each maximal plateau of cells with `cut >= t_cut` yields at most one split,
/// at its maximum. The run's first and last cells never start a segment.
/// Ties go to the middle of the tied cells, rounding toward the later one, so
/// the two edge marks of touching Stixels split between them.
fn run_splits<T: Real>(cut: &[T], start: usize, end: usize, t_cut: T) -> Vec<usize> {
    let lo = start + 1;
    let hi = end.saturating_sub(1);
    let mut splits = Vec::new();
    let mut i = lo;
    while i < hi {
        if cut[i] < t_cut {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < hi && cut[j] >= t_cut {
            j += 1;
        }
        let peak = cut[i..j].iter().copied().fold(T::neg_infinity(), T::max);
        let tied: Vec<usize> = (i..j).filter(|&k| cut[k] == peak).collect();
        splits.push(tied[tied.len() / 2]);
        i = j;
    }
    splits
}

/// Thresholds a normalized heat-map pair into a Stixel-World.
///
/// Every decoded Stixel is a ground object without distance; the maps carry
/// no type or range channel.
pub fn decode_heatmaps<T: Real>(hm: &HeatmapPair<T>, cfg: &DecodeConfig) -> Result<StixelWorld<T>, CodecError> {
    cfg.validate()?;
    let grid = hm.grid();
    let s = grid.stride();
    let t_occ: T = lit(cfg.t_occ);
    let t_cut: T = lit(cfg.t_cut);
    let m = grid.rows();
    let mut stixels = Vec::new();
    for c in 0..grid.cols() {
        let occ = hm.occ().column(c);
        let cut = hm.cut().column(c);
        let mut r = 0;
        while r < m {
            if occ[r] < t_occ {
                r += 1;
                continue;
            }
            let start = r;
            while r < m && occ[r] >= t_occ {
                r += 1;
            }
            let end = r;
            if end - start < cfg.min_run_cells {
                continue;
            }
            let mut bounds = vec![start];
            bounds.extend(run_splits(&cut, start, end, t_cut));
            bounds.push(end);
            for w in bounds.windows(2) {
                stixels.push(Stixel::new(
                    c as u32,
                    w[0] as u32 * s,
                    w[1] as u32 * s,
                    StixelType::GroundObject,
                    None,
                )?);
            }
        }
    }
    Ok(StixelWorld::new(stixels, grid)?)
}

/// Object Stixels snapped outward to cell boundaries and typed as ground
/// objects: what a lossless decode of the encoded targets yields.
pub fn quantize_world<T: Real>(world: &StixelWorld<T>) -> Result<StixelWorld<T>, CodecError> {
    let s = world.stixel_width();
    let stixels = world
        .objects()
        .map(|st| {
            let (top, bottom) = cell_span(st, s);
            Stixel::new(
                st.column(),
                top as u32 * s,
                bottom as u32 * s,
                StixelType::GroundObject,
                None,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StixelWorld::new(stixels, world.grid())?)
}
